#include <stdio.h>
#include <stdlib.h>
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
    return mu_peak * k;
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
        p->target = 0.22;
        p->ramp = 0.08;
    } else if (p->mode == MODE_ECO) {
        p->target = 0.12;
        p->ramp = 0.03;
    } else {
        p->target = 0.18;
        p->ramp = 0.05;
    }
}

int abs_control(struct wheel_state *s, struct params *p, double slip) {
    int releasing = 0;
    double cmd = s->pressure;
    if (slip > p->target + 0.05) {
        cmd = s->pressure * 0.5;
        releasing = 1;
    } else if (slip < p->target) {
        cmd = s->pressure + p->ramp;
    }
    if (cmd > 1.0) {
        cmd = 1.25;
    }
    if (cmd < 0.0) {
        cmd = 0.0;
    }
    s->pressure = cmd;
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
    return f & 7;
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
    s.v = v0;
    s.w = v0;
    s.x = 0.0;
    s.pressure = 0.0;
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
        if (s.v < 0.5) {
            f_road = p->mu * g * s.pressure;
        }
        f_brake = s.pressure * brake_gain;
        if (s.pressure > peak_p) {
            peak_p = s.pressure;
        }
        wdot = (f_road - f_brake) * wheel_ratio;
        s.v = s.v - f_road * dt;
        if (s.v < 0.0) {
            s.v = 0.0;
        }
        s.w += wdot * dt;
        if (s.w < 0.0) {
            s.w = 0.0;
        }
        if (s.w > s.v) {
            s.w = s.v;
        }
        s.x = s.x + s.v * dt;
        energy = energy + p->mass * f_road * s.v * dt;
        t = t + dt;
        step++;
        flags = status_flags(rel, p->mu, s.v);
        if (step % 10 == 0) {
            crc = mix(crc, s.x, flags);
        }
    }
    out->distance = s.x;
    out->time = t;
    out->peak_slip = peak;
    out->peak_pressure = peak_p;
    out->energy = energy / 1000.0;
    out->cycles = cycles;
    out->steps = step;
    out->checksum = crc;
    out->flags = flags;
}

int main(int argc, char **argv) {
    struct params p;
    struct summary r;
    double v0;
    if (argc < 5) {
        printf("usage: brake SPEED MU MASS MODE\n");
        return 2;
    }
    v0 = atof(argv[1]);
    p.mu = atof(argv[2]);
    p.mass = atof(argv[3]);
    p.mode = atoi(argv[4]);
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
