#include <math.h>
#include <stdio.h>
#include "xikernel.h"

int main(void) {
    xk_model *m = NULL;
    if (xk_model_new("{\"radii\":[1.0]}", "{\"zArity\":1,\"terms\":[]}", 40, false, &m) != XK_STATUS_OK) {
        fprintf(stderr, "model: %s\n", xk_last_error());
        return 1;
    }
    double re = 0.0, im = 0.0, k = 0.0;
    xk_status st = xk_model_kernel(m, "{\"arity\":1,\"terms\":[{\"alpha\":[0],\"re\":1.0}]}", &re, &im, 1, &k);
    xk_model_free(m);
    if (st != XK_STATUS_OK) {
        fprintf(stderr, "kernel: %s\n", xk_last_error());
        return 1;
    }
    if (xk_model_new("{bad", "{}", 1, false, &m) != XK_STATUS_PARSE || xk_last_error() == NULL) {
        return 1;
    }
    printf("K = %.12f\n", k);
    return fabs(k - 1.0 / M_PI) < 1e-9 ? 0 : 1;
}
