//! Deterministic sine/cosine for environment dynamics.
//!
//! Platform libm implementations differ by an ulp on some arguments, which
//! breaks bit-exact replay of the committed trace fixtures across
//! toolchains. These kernels fix one operation sequence (Cody-Waite
//! reduction by pi/2 plus the classic fdlibm minimax polynomials) so any
//! IEEE-754 double implementation, including the fixture generator's
//! transcription, produces identical bits. Arguments stay small here
//! (|x| < 16), well inside the two-term reduction's accurate range.

const INV_PIO2: f64 = 6.36619772367581382433e-01;
const PIO2_HI: f64 = 1.57079632679489655800e+00;
const PIO2_LO: f64 = 6.12323399573676603587e-17;

const S1: f64 = -1.66666666666666324348e-01;
const S2: f64 = 8.33333333332248946124e-03;
const S3: f64 = -1.98412698298579493134e-04;
const S4: f64 = 2.75573137070700676789e-06;
const S5: f64 = -2.50507602534068634195e-08;
const S6: f64 = 1.58969099521155010221e-10;

const C1: f64 = 4.16666666666666019037e-02;
const C2: f64 = -1.38888888888741095749e-03;
const C3: f64 = 2.48015872894767294178e-05;
const C4: f64 = -2.75573143513906633035e-07;
const C5: f64 = 2.08757232129817482790e-09;
const C6: f64 = -1.13596475577881948265e-11;

fn kernel_sin(x: f64) -> f64 {
    let z = x * x;
    let r = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    x + z * x * (S1 + z * r)
}

fn kernel_cos(x: f64) -> f64 {
    let z = x * x;
    let r = z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    w + (((1.0 - w) - hz) + z * r)
}

/// (sin x, cos x) with the shared deterministic operation sequence.
pub fn sin_cos(x: f64) -> (f64, f64) {
    let k = (x * INV_PIO2 + 0.5).floor();
    let r = (x - k * PIO2_HI) - k * PIO2_LO;
    let quadrant = (k as i64).rem_euclid(4);
    let (s, c) = (kernel_sin(r), kernel_cos(r));
    match quadrant {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub fn sin(x: f64) -> f64 {
    sin_cos(x).0
}

pub fn cos(x: f64) -> f64 {
    sin_cos(x).1
}
