#include <stdio.h>
#include <string.h>
#include "soesn.h"

int main(void) {
    const char *topology = "{\"kind\": \"dense\", \"n\": 20, \"seed\": 3}";
    SoesnReservoir *r = NULL;
    SoesnTrajectory *t = NULL;
    char *report = NULL;
    if (soesn_reservoir_from_topology(topology, 1.25, 0.5, 1, &r) != SOESN_STATUS_OK) {
        fprintf(stderr, "%s\n", soesn_last_error());
        return 1;
    }
    if (soesn_reservoir_run(r, 300, &t) != SOESN_STATUS_OK) return 2;
    if (soesn_trajectory_steps(t) != 301 || soesn_trajectory_units(t) != 20) return 3;
    if (soesn_trajectory_classify(t, 100, &report) != SOESN_STATUS_OK) return 4;
    if (strstr(report, "reservoir_is_self_oscillatory") == NULL) return 5;
    soesn_string_free(report);
    if (soesn_reservoir_from_topology("{\"kind\": \"dense\"}", 1.0, 0.5, 1, &r) != SOESN_STATUS_INVALID_INPUT) return 6;
    printf("ok %s\n", soesn_version());
    soesn_trajectory_free(t);
    soesn_reservoir_free(r);
    return 0;
}
