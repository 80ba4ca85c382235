#include <stdio.h>
#include "evodyn.h"

int main(void) {
    EvodynModelSpec spec = {0};
    spec.game = EVODYN_GAME_FAMILY_AFFINE;
    spec.a = 2.45;
    spec.b = -0.05;
    spec.dist = EVODYN_DIST_FAMILY_SQRT_SHIFT;
    spec.protocol = EVODYN_PROTOCOL_KIND_STANDARD;
    spec.n = 200;

    EvodynModel *model = NULL;
    if (evodyn_model_new(&spec, &model) != EVODYN_STATUS_OK) {
        fprintf(stderr, "model: %s\n", evodyn_last_error_message());
        return 1;
    }
    EvodynEquilibria *eq = NULL;
    if (evodyn_equilibria_find(model, &eq) != EVODYN_STATUS_OK) {
        return 2;
    }
    size_t n = evodyn_equilibria_len(eq);
    for (size_t i = 0; i < n; i++) {
        EvodynEquilibrium e;
        evodyn_equilibria_get(eq, i, &e);
        printf("%.6f %d\n", e.xbar, (int)e.stability);
    }
    EvodynEquilibrium dummy;
    if (evodyn_equilibria_get(eq, n, &dummy) != EVODYN_STATUS_OUT_OF_RANGE) {
        return 3;
    }
    evodyn_equilibria_free(eq);
    evodyn_model_free(model);
    if (evodyn_model_new(NULL, &model) != EVODYN_STATUS_NULL_POINTER) {
        return 4;
    }
    printf("version %s\n", evodyn_version());
    return 0;
}
