#include <stdio.h>
#include <stdlib.h>
#include "rangeweaver_rt.h"
Range ranges[5];
int rangeweaver_nslots = 5;
unsigned long rangeweaver_counts[1];
int rangeweaver_ncounts = 0;
enum { MODE_NORMAL, MODE_SPORT, MODE_ECO };
enum { FLAG_RELEASE = 1, FLAG_LOW_MU = 2, FLAG_SLOW = 4 };
struct wheel_state { double v; double w; double x; double pressure; };
struct params { double mass; double mu; double target; double ramp; int mode; };
struct summary { double distance; double time; double peak_slip; double peak_pressure; double energy; int cycles; int steps; unsigned long checksum; int flags; };

double friction_curve(double slip, double mu_peak) {
    double k;
    if (slip < 0.15) {
        k = slip / 0.15;
    } else {
        k = 1.0 - 0.3 * (slip - 0.15) / 0.85;
    }
    double __rw_ret0 = mu_peak * k;
    return __rw_ret0;
}

double compute_slip(double v, double w) {
    double s;
    if (v < 0.5) {
        return 0.0;
    }
    s = (v - w) / v;
    if (s < 0.0) {
        s = 0.0;
    }
    return s;
}

void select_mode(struct params *p) {
    if (p->mode == MODE_SPORT) {
        double __rw_sm0 = 0.22;
        p->target = __rw_sm0;
        double __rw_sm1 = 0.08;
        p->ramp = __rw_sm1;
    } else if (p->mode == MODE_ECO) {
        double __rw_sm2 = 0.12;
        p->target = __rw_sm2;
        double __rw_sm3 = 0.03;
        p->ramp = __rw_sm3;
    } else {
        double __rw_sm4 = 0.18;
        p->target = __rw_sm4;
        double __rw_sm5 = 0.05;
        p->ramp = __rw_sm5;
    }
    return;
}

int abs_control(struct wheel_state *s, struct params *p, double slip) {
    int releasing = 0;
    double cmd = s->pressure;
    if (slip > p->target + 0.05) {
        releasing = 1;
    } else if (slip < p->target) {
        cmd = s->pressure + p->ramp;
    }
    if (cmd > 1.0) {
        cmd = 1.0;
    }
    if (cmd < 0.0) {
        cmd = 0.0;
    }
    double __rw_sm0 = cmd;
    s->pressure = __rw_sm0;
    return releasing;
}

int status_flags(int releasing, double mu, double v) {
    int f = 0;
    if (releasing) {
        f = f | FLAG_RELEASE;
    }
    if (mu < 0.4) {
        f = f | FLAG_LOW_MU;
    }
    if (v < 5.0) {
        f = f | FLAG_SLOW;
    }
    int __rw_ret0 = f & 7;
    return __rw_ret0;
}

unsigned long mix(unsigned long crc, double x, int flags) {
    unsigned long sample = (unsigned long) (x * 100.0);
    crc = (crc * 31 + sample + flags) & 255;
    return crc;
}

void simulate(struct params *p, double v0, struct summary *out) {
    struct wheel_state s;
    double dt = 0.01;
    double g = 9.81;
    double brake_gain = 11.0;
    double wheel_ratio = 18.0;
    double t = 0.0;
    double slip;
    double mu_eff;
    double f_road;
    double f_brake;
    double wdot;
    double peak = 0.0;
    double peak_p = 0.0;
    double energy = 0.0;
    int rel;
    int was_releasing = 0;
    int cycles = 0;
    int step = 0;
    int flags = 0;
    unsigned long crc = 0;
    double __rw_sm0 = v0;
    update_range(&ranges[2], (double) energy);
    s.v = __rw_sm0;
    double __rw_sm1 = v0;
    s.w = __rw_sm1;
    double __rw_sm2 = 0.0;
    s.x = __rw_sm2;
    double __rw_sm3 = 0.0;
    s.pressure = __rw_sm3;
    while (s.v > 0.05 && t < 40.0) {
        slip = compute_slip(s.v, s.w);
        if (slip > peak) {
            peak = slip;
        }
        rel = abs_control(&s, p, slip);
        if (rel && !was_releasing) {
            cycles = cycles + 1;
        }
        was_releasing = rel;
        mu_eff = friction_curve(slip, p->mu);
        f_road = mu_eff * g;
        update_range(&ranges[3], (double) f_road);
        if (s.v < 0.5) {
            f_road = p->mu * g * s.pressure;
            update_range(&ranges[3], (double) f_road);
        }
        f_brake = s.pressure * brake_gain;
        if (s.pressure > peak_p) {
            peak_p = s.pressure;
        }
        wdot = (f_road - f_brake) * wheel_ratio;
        update_range(&ranges[4], (double) wdot);
        double __rw_sm4 = s.v - f_road * dt;
        update_range(&ranges[0], (double) __rw_sm4);
        s.v = __rw_sm4;
        if (s.v < 0.0) {
            double __rw_sm5 = 0.0;
            s.v = __rw_sm5;
        }
        double __rw_sm6 = s.w + (wdot * dt);
        update_range(&ranges[1], (double) __rw_sm6);
        s.w = __rw_sm6;
        if (s.w < 0.0) {
            double __rw_sm7 = 0.0;
            s.w = __rw_sm7;
        }
        if (s.w > s.v) {
            double __rw_sm8 = s.v;
            s.w = __rw_sm8;
        }
        double __rw_sm9 = s.x + s.v * dt;
        s.x = __rw_sm9;
        energy = energy + p->mass * f_road * s.v * dt;
        update_range(&ranges[2], (double) energy);
        t = t + dt;
        step = step + 1;
        flags = status_flags(rel, p->mu, s.v);
        if (step % 10 == 0) {
            crc = mix(crc, s.x, flags);
        }
    }
    double __rw_sm10 = s.x;
    out->distance = __rw_sm10;
    double __rw_sm11 = t;
    out->time = __rw_sm11;
    double __rw_sm12 = peak;
    out->peak_slip = __rw_sm12;
    double __rw_sm13 = peak_p;
    out->peak_pressure = __rw_sm13;
    double __rw_sm14 = energy / 1000.0;
    out->energy = __rw_sm14;
    int __rw_sm15 = cycles;
    out->cycles = __rw_sm15;
    int __rw_sm16 = step;
    out->steps = __rw_sm16;
    unsigned long __rw_sm17 = crc;
    out->checksum = __rw_sm17;
    int __rw_sm18 = flags;
    out->flags = __rw_sm18;
    return;
}

int main(int argc, char **argv) {
    struct params p;
    struct summary r;
    double v0;
    atexit(rangeweaver_dump_ranges);
    if (argc < 5) {
        printf("usage: brake SPEED MU MASS MODE\n");
        return 2;
    }
    v0 = atof(argv[1]);
    double __rw_sm0 = atof(argv[2]);
    p.mu = __rw_sm0;
    double __rw_sm1 = atof(argv[3]);
    p.mass = __rw_sm1;
    int __rw_sm2 = atoi(argv[4]);
    p.mode = __rw_sm2;
    if (v0 <= 0.0 || p.mu <= 0.0 || p.mass <= 0.0) {
        printf("invalid input\n");
        return 1;
    }
    select_mode(&p);
    simulate(&p, v0, &r);
    printf("distance %.3f m\n", r.distance);
    printf("time %.2f s\n", r.time);
    printf("peak slip %.3f\n", r.peak_slip);
    printf("peak pressure %.2f\n", r.peak_pressure);
    printf("abs cycles %d\n", r.cycles);
    printf("energy %.1f kJ\n", r.energy);
    printf("telemetry %lu/%d\n", r.checksum, r.flags);
    return 0;
}
