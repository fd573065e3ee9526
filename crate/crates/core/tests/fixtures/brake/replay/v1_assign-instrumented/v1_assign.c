#include <stdio.h>
#include <stdlib.h>
#include "rangeweaver_rt.h"
Range ranges[70];
int rangeweaver_nslots = 70;
unsigned long rangeweaver_counts[1];
int rangeweaver_ncounts = 0;
enum { MODE_NORMAL, MODE_SPORT, MODE_ECO };
enum { FLAG_RELEASE = 1, FLAG_LOW_MU = 2, FLAG_SLOW = 4 };
struct wheel_state { double v; double w; double x; double pressure; };
struct params { double mass; double mu; double target; double ramp; int mode; };
struct summary { double distance; double time; double peak_slip; double peak_pressure; double energy; int cycles; int steps; unsigned long checksum; int flags; };

double friction_curve(double slip, double mu_peak) {
    double k;
    update_range(&ranges[10], (double) slip);
    update_range(&ranges[9], (double) mu_peak);
    if (slip < 0.15) {
        k = slip / 0.15;
        update_range(&ranges[8], (double) k);
    } else {
        k = 1.0 - 0.3 * (slip - 0.15) / 0.85;
        update_range(&ranges[8], (double) k);
    }
    double __rw_ret0 = mu_peak * k;
    update_range(&ranges[7], (double) __rw_ret0);
    update_range(&ranges[7], (double) __rw_ret0);
    return __rw_ret0;
}

double compute_slip(double v, double w) {
    double s;
    update_range(&ranges[5], (double) v);
    update_range(&ranges[6], (double) w);
    if (v < 0.5) {
        return 0.0;
    }
    s = (v - w) / v;
    update_range(&ranges[4], (double) s);
    if (s < 0.0) {
        s = 0.0;
        update_range(&ranges[4], (double) s);
    }
    update_range(&ranges[4], (double) s);
    return s;
}

void select_mode(struct params *p) {
    if (p->mode == MODE_SPORT) {
        double __rw_sm0 = 0.22;
        update_range(&ranges[20], (double) __rw_sm0);
        p->target = __rw_sm0;
        double __rw_sm1 = 0.08;
        update_range(&ranges[21], (double) __rw_sm1);
        p->ramp = __rw_sm1;
    } else if (p->mode == MODE_ECO) {
        double __rw_sm2 = 0.12;
        update_range(&ranges[22], (double) __rw_sm2);
        p->target = __rw_sm2;
        double __rw_sm3 = 0.03;
        update_range(&ranges[23], (double) __rw_sm3);
        p->ramp = __rw_sm3;
    } else {
        double __rw_sm4 = 0.18;
        update_range(&ranges[24], (double) __rw_sm4);
        p->target = __rw_sm4;
        double __rw_sm5 = 0.05;
        update_range(&ranges[25], (double) __rw_sm5);
        p->ramp = __rw_sm5;
    }
    return;
}

int abs_control(struct wheel_state *s, struct params *p, double slip) {
    int releasing = 0;
    double cmd = s->pressure;
    update_range(&ranges[3], (double) slip);
    update_range(&ranges[2], (double) releasing);
    update_range(&ranges[1], (double) cmd);
    if (slip > p->target + 0.05) {
        cmd = s->pressure * 0.5;
        update_range(&ranges[1], (double) cmd);
        releasing = 1;
        update_range(&ranges[2], (double) releasing);
    } else if (slip < p->target) {
        cmd = s->pressure + p->ramp;
        update_range(&ranges[1], (double) cmd);
    }
    if (cmd > 1.0) {
        cmd = 1.0;
        update_range(&ranges[1], (double) cmd);
    }
    if (cmd < 0.0) {
        cmd = 0.0;
        update_range(&ranges[1], (double) cmd);
    }
    double __rw_sm0 = cmd;
    update_range(&ranges[0], (double) __rw_sm0);
    s->pressure = __rw_sm0;
    update_range(&ranges[2], (double) releasing);
    return releasing;
}

int status_flags(int releasing, double mu, double v) {
    int f = 0;
    update_range(&ranges[68], (double) releasing);
    update_range(&ranges[67], (double) mu);
    update_range(&ranges[69], (double) v);
    update_range(&ranges[66], (double) f);
    if (releasing) {
        f = f | FLAG_RELEASE;
        update_range(&ranges[66], (double) f);
    }
    if (mu < 0.4) {
        f = f | FLAG_LOW_MU;
        update_range(&ranges[66], (double) f);
    }
    if (v < 5.0) {
        f = f | FLAG_SLOW;
        update_range(&ranges[66], (double) f);
    }
    int __rw_ret0 = f & 7;
    update_range(&ranges[65], (double) __rw_ret0);
    update_range(&ranges[65], (double) __rw_ret0);
    return __rw_ret0;
}

unsigned long mix(unsigned long crc, double x, int flags) {
    unsigned long sample = (unsigned long) (x * 100.0);
    update_range(&ranges[16], (double) crc);
    update_range(&ranges[19], (double) x);
    update_range(&ranges[17], (double) flags);
    update_range(&ranges[18], (double) sample);
    crc = (crc * 31 + sample + flags) & 255;
    update_range(&ranges[16], (double) crc);
    update_range(&ranges[16], (double) crc);
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
    update_range(&ranges[61], (double) v0);
    update_range(&ranges[48], (double) dt);
    update_range(&ranges[53], (double) g);
    update_range(&ranges[45], (double) brake_gain);
    update_range(&ranges[64], (double) wheel_ratio);
    update_range(&ranges[60], (double) t);
    update_range(&ranges[55], (double) peak);
    update_range(&ranges[56], (double) peak_p);
    update_range(&ranges[49], (double) energy);
    update_range(&ranges[62], (double) was_releasing);
    update_range(&ranges[47], (double) cycles);
    update_range(&ranges[59], (double) step);
    update_range(&ranges[52], (double) flags);
    update_range(&ranges[46], (double) crc);
    update_range(&ranges[26], (double) __rw_sm0);
    s.v = __rw_sm0;
    double __rw_sm1 = v0;
    update_range(&ranges[27], (double) __rw_sm1);
    s.w = __rw_sm1;
    double __rw_sm2 = 0.0;
    update_range(&ranges[37], (double) __rw_sm2);
    s.x = __rw_sm2;
    double __rw_sm3 = 0.0;
    update_range(&ranges[38], (double) __rw_sm3);
    s.pressure = __rw_sm3;
    while (s.v > 0.05 && t < 40.0) {
        slip = compute_slip(s.v, s.w);
        update_range(&ranges[58], (double) slip);
        if (slip > peak) {
            peak = slip;
            update_range(&ranges[55], (double) peak);
        }
        rel = abs_control(&s, p, slip);
        update_range(&ranges[57], (double) rel);
        if (rel && !was_releasing) {
            cycles = cycles + 1;
            update_range(&ranges[47], (double) cycles);
        }
        was_releasing = rel;
        update_range(&ranges[62], (double) was_releasing);
        mu_eff = friction_curve(slip, p->mu);
        update_range(&ranges[54], (double) mu_eff);
        f_road = mu_eff * g;
        update_range(&ranges[51], (double) f_road);
        if (s.v < 0.5) {
            f_road = p->mu * g * s.pressure;
            update_range(&ranges[51], (double) f_road);
        }
        f_brake = s.pressure * brake_gain;
        update_range(&ranges[50], (double) f_brake);
        if (s.pressure > peak_p) {
            peak_p = s.pressure;
            update_range(&ranges[56], (double) peak_p);
        }
        wdot = (f_road - f_brake) * wheel_ratio;
        update_range(&ranges[63], (double) wdot);
        double __rw_sm4 = s.v - f_road * dt;
        update_range(&ranges[39], (double) __rw_sm4);
        s.v = __rw_sm4;
        if (s.v < 0.0) {
            double __rw_sm5 = 0.0;
            update_range(&ranges[40], (double) __rw_sm5);
            s.v = __rw_sm5;
        }
        double __rw_sm6 = wdot * dt;
        update_range(&ranges[41], (double) __rw_sm6);
        s.w = __rw_sm6;
        if (s.w < 0.0) {
            double __rw_sm7 = 0.0;
            update_range(&ranges[42], (double) __rw_sm7);
            s.w = __rw_sm7;
        }
        if (s.w > s.v) {
            double __rw_sm8 = s.v;
            update_range(&ranges[43], (double) __rw_sm8);
            s.w = __rw_sm8;
        }
        double __rw_sm9 = s.x + s.v * dt;
        update_range(&ranges[44], (double) __rw_sm9);
        s.x = __rw_sm9;
        energy = energy + p->mass * f_road * s.v * dt;
        update_range(&ranges[49], (double) energy);
        t = t + dt;
        update_range(&ranges[60], (double) t);
        step = step + 1;
        update_range(&ranges[59], (double) step);
        flags = status_flags(rel, p->mu, s.v);
        update_range(&ranges[52], (double) flags);
        if (step % 10 == 0) {
            crc = mix(crc, s.x, flags);
            update_range(&ranges[46], (double) crc);
        }
    }
    double __rw_sm10 = s.x;
    update_range(&ranges[28], (double) __rw_sm10);
    out->distance = __rw_sm10;
    double __rw_sm11 = t;
    update_range(&ranges[29], (double) __rw_sm11);
    out->time = __rw_sm11;
    double __rw_sm12 = peak;
    update_range(&ranges[30], (double) __rw_sm12);
    out->peak_slip = __rw_sm12;
    double __rw_sm13 = peak_p;
    update_range(&ranges[31], (double) __rw_sm13);
    out->peak_pressure = __rw_sm13;
    double __rw_sm14 = energy / 1000.0;
    update_range(&ranges[32], (double) __rw_sm14);
    out->energy = __rw_sm14;
    int __rw_sm15 = cycles;
    update_range(&ranges[33], (double) __rw_sm15);
    out->cycles = __rw_sm15;
    int __rw_sm16 = step;
    update_range(&ranges[34], (double) __rw_sm16);
    out->steps = __rw_sm16;
    unsigned long __rw_sm17 = crc;
    update_range(&ranges[35], (double) __rw_sm17);
    out->checksum = __rw_sm17;
    int __rw_sm18 = flags;
    update_range(&ranges[36], (double) __rw_sm18);
    out->flags = __rw_sm18;
    return;
}

int main(int argc, char **argv) {
    struct params p;
    struct summary r;
    double v0;
    atexit(rangeweaver_dump_ranges);
    update_range(&ranges[14], (double) argc);
    if (argc < 5) {
        printf("usage: brake SPEED MU MASS MODE\n");
        return 2;
    }
    v0 = atof(argv[1]);
    update_range(&ranges[15], (double) v0);
    double __rw_sm0 = atof(argv[2]);
    update_range(&ranges[11], (double) __rw_sm0);
    p.mu = __rw_sm0;
    double __rw_sm1 = atof(argv[3]);
    update_range(&ranges[12], (double) __rw_sm1);
    p.mass = __rw_sm1;
    int __rw_sm2 = atoi(argv[4]);
    update_range(&ranges[13], (double) __rw_sm2);
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
