/* Fast-forward 100 model iterations on the second-order plant and compare
 * with the explicit loop. Exits non-zero on any failure. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "ilc.h"

#define N 100

static int check(IlcStatus status, const char *what) {
    if (status != ILC_STATUS_OK) {
        const char *msg = ilc_last_error();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)status, msg ? msg : "");
        return 1;
    }
    return 0;
}

int main(void) {
    IlcPlant *plant = NULL;
    IlcLifted *lifted = NULL;
    IlcFastForward *ff = NULL;
    double u0[N], e0[N], y[N], x0[2] = {0.0, 0.0};
    double u_fast[N], e_fast[N], u_slow[N], e_slow[N];
    const double pi = 3.14159265358979323846;

    if (check(ilc_plant_second_order(0.5, 37.0, 0.01, &plant), "plant")) return 1;
    if (check(ilc_lifted_build(plant, N, 0, &lifted), "lifted")) return 1;
    if (check(ilc_fast_forward_new(lifted, ILC_LAW_P_TRANSPOSE, 1.0, &ff), "fast_forward")) return 1;

    for (int k = 0; k < N; ++k) {
        double c = 1.0 - cos(20.0 * pi * 0.01 * (k + 1));
        u0[k] = pi * c * c;
    }
    if (check(ilc_lifted_output(lifted, u0, N, x0, 2, y, N), "output")) return 1;
    for (int k = 0; k < N; ++k) e0[k] = u0[k] - y[k];

    if (check(ilc_fast_forward_advance(ff, u0, N, e0, N, 100, u_fast, e_fast), "advance")) return 1;
    if (check(ilc_fast_forward_explicit(ff, u0, N, e0, N, 100, u_slow, e_slow), "explicit")) return 1;

    double diff = 0.0, norm = 0.0;
    for (int k = 0; k < N; ++k) {
        diff += (u_fast[k] - u_slow[k]) * (u_fast[k] - u_slow[k]);
        norm += u_slow[k] * u_slow[k];
    }
    printf("relative input deviation %.3e\n", sqrt(diff / norm));

    ilc_fast_forward_free(ff);
    ilc_lifted_free(lifted);
    ilc_plant_free(plant);
    return sqrt(diff / norm) < 1e-8 ? 0 : 1;
}
