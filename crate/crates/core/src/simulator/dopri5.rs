//! Dormand–Prince 5(4) with the continuous extension of order 4, specialised
//! to autonomous two-dimensional systems.

pub(crate) type Vec2 = [f64; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy(y: &Vec2, h: f64, terms: &[(f64, &Vec2)]) -> Vec2 {
    let mut out = *y;
    for i in 0..2 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn finite(v: &Vec2) -> bool {
    v[0].is_finite() && v[1].is_finite()
}

/// Interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dense {
    pub t0: f64,
    pub h: f64,
    r: [Vec2; 5],
}

impl Dense {
    pub fn eval(&self, t: f64) -> Vec2 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

pub(crate) enum Attempt {
    /// Trial step produced overflow or NaN; retry smaller.
    NonFinite,
    Done {
        y1: Vec2,
        k7: Vec2,
        err: f64,
        dense: Dense,
    },
}

pub(crate) struct Dopri5<F> {
    pub f: F,
    pub rtol: f64,
    pub atol: f64,
}

impl<F: Fn(&Vec2) -> Vec2> Dopri5<F> {
    pub fn scaled_norm(&self, v: &Vec2, y: &Vec2, y_alt: &Vec2) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let sk = self.atol + self.rtol * y[i].abs().max(y_alt[i].abs());
            acc += (v[i] / sk).powi(2);
        }
        (acc / 2.0).sqrt()
    }

    /// Starting step size from the local scale of `y` and `f(y)`.
    pub fn initial_step(&self, y0: &Vec2, f0: &Vec2, max_step: f64) -> f64 {
        let d0 = self.scaled_norm(y0, y0, y0);
        let d1 = self.scaled_norm(f0, y0, y0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy(y0, h0, &[(1.0, f0)]);
        let f1 = (self.f)(&y1);
        let diff = [f1[0] - f0[0], f1[1] - f0[1]];
        let d2 = if finite(&f1) {
            self.scaled_norm(&diff, y0, y0) / h0
        } else {
            f64::INFINITY
        };
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(max_step)
    }

    pub fn attempt(&self, t: f64, y: &Vec2, k1: &Vec2, h: f64) -> Attempt {
        let f = &self.f;
        let k2 = f(&axpy(y, h, &[(A21, k1)]));
        let k3 = f(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(
            y,
            h,
            &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        ));
        let k6 = f(&axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y1 = axpy(
            y,
            h,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        if ![k2, k3, k4, k5, k6, y1].iter().all(finite) {
            return Attempt::NonFinite;
        }
        let k7 = f(&y1);
        if !finite(&k7) {
            return Attempt::NonFinite;
        }
        let ev = axpy(
            &[0.0; 2],
            h,
            &[
                (E1, k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
        );
        let err = self.scaled_norm(&ev, y, &y1);
        let mut r = [[0.0; 2]; 5];
        for i in 0..2 {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Attempt::Done {
            y1,
            k7,
            err,
            dense: Dense { t0: t, h, r },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(rtol: f64) -> (Vec2, Vec<Dense>) {
        // harmonic oscillator, exact solution (cos t, -sin t)
        let solver = Dopri5 {
            f: |y: &Vec2| [y[1], -y[0]],
            rtol,
            atol: rtol,
        };
        let mut y = [1.0, 0.0];
        let mut k1 = (solver.f)(&y);
        let mut t = 0.0;
        let mut h = solver.initial_step(&y, &k1, f64::INFINITY);
        let mut dense = Vec::new();
        while t < 10.0 {
            h = h.min(10.0 - t);
            match solver.attempt(t, &y, &k1, h) {
                Attempt::Done {
                    y1,
                    k7,
                    err,
                    dense: d,
                } => {
                    let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
                    if err <= 1.0 {
                        t += h;
                        y = y1;
                        k1 = k7;
                        dense.push(d);
                    }
                    h *= fac;
                }
                Attempt::NonFinite => h *= 0.5,
            }
        }
        (y, dense)
    }

    #[test]
    fn oscillator_accuracy() {
        let (y, _) = run(1e-10);
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_matches_exact() {
        let (_, dense) = run(1e-10);
        for d in &dense {
            for k in 0..=4 {
                let t = d.t0 + d.h * k as f64 / 4.0;
                let v = d.eval(t);
                assert!((v[0] - t.cos()).abs() < 1e-7, "t = {t}");
            }
        }
    }

    #[test]
    fn nonfinite_stage_is_reported() {
        let solver = Dopri5 {
            f: |y: &Vec2| [y[0].exp(), 0.0],
            rtol: 1e-8,
            atol: 1e-8,
        };
        let y = [700.0, 0.0];
        let k1 = (solver.f)(&y);
        assert!(matches!(
            solver.attempt(0.0, &y, &k1, 1.0),
            Attempt::NonFinite
        ));
    }
}
