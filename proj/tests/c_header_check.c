/* The public header must compile as C and link against the shared library. */
#include <stdio.h>

#include "curlfem/curlfem.h"

int main(void) {
  curlfem_mesh* mesh = NULL;
  curlfem_mesh_info info;
  if (curlfem_mesh_generate(CURLFEM_DOMAIN_UNIT_CUBE, 1, 1, 1, &mesh) != CURLFEM_OK) {
    fprintf(stderr, "%s\n", curlfem_last_error());
    return 1;
  }
  if (curlfem_mesh_get_info(mesh, &info) != CURLFEM_OK || info.n_tets != 6) return 1;
  curlfem_mesh_free(mesh);
  printf("curlfem %s\n", curlfem_version());
  return 0;
}
