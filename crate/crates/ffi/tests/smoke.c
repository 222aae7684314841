#include <math.h>
#include <stdio.h>

#include "klchernoff.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "check failed line %d: %s\n", __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    KlcBounds *h = NULL;
    CHECK(klc_bounds_new(2, 2, &h) == KLC_STATUS_OK);

    double g = 0.0;
    CHECK(klc_gkn_eval(h, 1.0, &g) == KLC_STATUS_OK);
    CHECK(fabs(g - 2.5) < 1e-13);

    KlcBound b;
    CHECK(klc_bound(h, KLC_METHOD_TYPES, 5.0, &b) == KLC_STATUS_OK);
    CHECK(fabs(b.value - 3.0 * exp(-5.0)) < 1e-15);
    CHECK(isnan(b.lambda_used));

    CHECK(klc_bound(h, KLC_METHOD_UNCORRECTED, 0.5, &b) == KLC_STATUS_BELOW_CORRECTION_DOMAIN);
    char msg[256];
    CHECK(klc_last_error_message(msg, sizeof msg) > 0);

    double t = 0.0;
    CHECK(klc_critical_value(h, 0.5, KLC_METHOD_TYPES, &t) == KLC_STATUS_OK);
    CHECK(fabs(t - log(6.0)) < 1e-8);
    klc_bounds_free(h);

    const uint64_t freq[] = {1, 2, 3};
    const uint64_t species[] = {118, 74, 44};
    double upper = 0.0;
    CHECK(klc_unseen_upper_bound(freq, species, 3, 0.05, &t, &upper) == KLC_STATUS_OK);
    CHECK(upper > 0.0 && upper < 1.0);

    CHECK(klc_bounds_new(1, 2, &h) == KLC_STATUS_INVALID_SHAPE);
    printf("%s\n", klc_status_string(KLC_STATUS_OK));
    return 0;
}
