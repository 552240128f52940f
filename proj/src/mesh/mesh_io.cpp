#include <json.hpp>
#include <sstream>

#include "curlfem/mesh/mesh.hpp"

namespace curlfem::mesh {

namespace {

// Non-empty, comment-stripped lines of a TetGen file, split into tokens.
std::vector<std::vector<std::string>> tokenize(const std::string& text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  return lines;
}

long parse_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) throw Error(ErrorCode::kParse, std::string("expected integer for ") + what + ", got '" + s + "'");
  return v;
}

double parse_real(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) throw Error(ErrorCode::kParse, "expected number, got '" + s + "'");
  return v;
}

}  // namespace

Mesh import_tetgen(const std::string& node_text, const std::string& ele_text) {
  const auto nodes = tokenize(node_text);
  if (nodes.empty() || nodes[0].size() < 2) throw Error(ErrorCode::kParse, ".node: malformed header");
  const long npoints = parse_int(nodes[0][0], "#points");
  const long dim = parse_int(nodes[0][1], "dimension");
  const long nattrs = nodes[0].size() > 2 ? parse_int(nodes[0][2], "#attributes") : 0;
  const long nmarkers = nodes[0].size() > 3 ? parse_int(nodes[0][3], "#markers") : 0;
  if (npoints < 4 || dim != 3 || nattrs < 0 || nmarkers < 0 || nmarkers > 1) {
    throw Error(ErrorCode::kParse, ".node: malformed header");
  }
  if (static_cast<long>(nodes.size()) - 1 < npoints) throw Error(ErrorCode::kParse, ".node: too few points");

  const long base = parse_int(nodes[1][0], "point id");
  if (base != 0 && base != 1) throw Error(ErrorCode::kParse, ".node: first point id must be 0 or 1");
  std::vector<Vec3> vertices(npoints);
  std::vector<char> seen(npoints, 0);
  for (long i = 0; i < npoints; ++i) {
    const auto& tok = nodes[i + 1];
    if (static_cast<long>(tok.size()) < 4 + nattrs + nmarkers) throw Error(ErrorCode::kParse, ".node: short point line");
    const long id = parse_int(tok[0], "point id") - base;
    if (id < 0 || id >= npoints || seen[id]) throw Error(ErrorCode::kParse, ".node: bad or duplicate point id");
    seen[id] = 1;
    vertices[id] = {parse_real(tok[1]), parse_real(tok[2]), parse_real(tok[3])};
  }

  const auto eles = tokenize(ele_text);
  if (eles.empty() || eles[0].size() < 2) throw Error(ErrorCode::kParse, ".ele: malformed header");
  const long ntets = parse_int(eles[0][0], "#tetrahedra");
  const long per_tet = parse_int(eles[0][1], "nodes per tetrahedron");
  if (ntets < 1) throw Error(ErrorCode::kParse, ".ele: malformed header");
  if (per_tet != 4) throw Error(ErrorCode::kParse, ".ele: nodes per tetrahedron must be 4");
  if (static_cast<long>(eles.size()) - 1 < ntets) throw Error(ErrorCode::kParse, ".ele: too few tetrahedra");

  std::vector<Tet> tets(ntets);
  std::vector<char> referenced(npoints, 0);
  for (long t = 0; t < ntets; ++t) {
    const auto& tok = eles[t + 1];
    if (tok.size() < 5) throw Error(ErrorCode::kParse, ".ele: short tetrahedron line");
    for (int i = 0; i < 4; ++i) {
      const long v = parse_int(tok[i + 1], "vertex id") - base;
      if (v < 0 || v >= npoints) {
        throw Error(ErrorCode::kParse, ".ele: vertex id out of range in tetrahedron " + std::to_string(t));
      }
      tets[t][i] = static_cast<Index>(v);
      referenced[v] = 1;
    }
  }
  for (long i = 0; i < npoints; ++i)
    if (!referenced[i]) throw Error(ErrorCode::kParse, ".node: point " + std::to_string(i + base) + " unreferenced");

  for (const Tet& t : tets) {
    const double vol = signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]);
    if (vol == 0.0) throw Error(ErrorCode::kDegenerate, ".ele: degenerate tetrahedron");
  }
  orient_positive(vertices, tets);
  Mesh m = build_mesh(std::move(vertices), std::move(tets));
  assign_initial_marks(m);
  return m;
}

std::string to_json(const Mesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec3& p : mesh.vertices) j["vertices"].push_back({p.x, p.y, p.z});
  j["tets"] = nlohmann::json::array();
  for (const Tet& t : mesh.tets) j["tets"].push_back({t[0], t[1], t[2], t[3]});
  return j.dump();
}

Mesh from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("mesh json: ") + e.what());
  }
  if (!j.contains("vertices") || !j.contains("tets")) throw Error(ErrorCode::kParse, "mesh json: missing arrays");
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  try {
    for (const auto& p : j["vertices"]) vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    for (const auto& t : j["tets"]) {
      Tet tet;
      for (int i = 0; i < 4; ++i) {
        tet[i] = t.at(i).get<Index>();
        if (tet[i] < 0 || tet[i] >= static_cast<Index>(vertices.size())) {
          throw Error(ErrorCode::kParse, "mesh json: vertex id out of range");
        }
      }
      tets.push_back(tet);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("mesh json: ") + e.what());
  }
  orient_positive(vertices, tets);
  Mesh m = build_mesh(std::move(vertices), std::move(tets));
  assign_initial_marks(m);
  return m;
}

}  // namespace curlfem::mesh
