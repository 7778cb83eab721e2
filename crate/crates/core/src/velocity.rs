//! Closed-form velocity integrals of χ-intervals.
//!
//! Every v-integral in the crate is an integral of a polynomial (degree ≤ 4)
//! over an interval intersection, so nothing is ever discretised in v.

/// Polynomial `c[0] + c[1] v + ... + c[4] v^4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poly(pub [f64; 5]);

impl Poly {
    pub const ONE: Poly = Poly([1.0, 0.0, 0.0, 0.0, 0.0]);
    pub const V: Poly = Poly([0.0, 1.0, 0.0, 0.0, 0.0]);

    pub fn mul(self, other: Poly) -> Poly {
        let mut out = [0.0; 5];
        for (i, a) in self.0.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                if *b == 0.0 {
                    continue;
                }
                assert!(i + j < 5, "polynomial degree exceeds 4");
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Taylor coefficients about `c`.
    fn shifted(self, c: f64) -> [f64; 5] {
        let mut a = self.0;
        // repeated synthetic division
        for k in 0..5 {
            for j in (k..4).rev() {
                a[j] += c * a[j + 1];
            }
        }
        a
    }

    /// ∫_lo^hi p(v) dv; zero when `hi <= lo`.
    ///
    /// Integrates about the midpoint so that narrow intervals far from the
    /// origin keep full relative accuracy.
    pub fn integrate(self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let c = 0.5 * (lo + hi);
        let w = 0.5 * (hi - lo);
        let a = self.shifted(c);
        let w2 = w * w;
        2.0 * w * (a[0] + w2 * (a[2] / 3.0 + w2 * a[4] / 5.0))
    }
}

/// Polynomial restricted to `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    lo: f64,
    hi: f64,
    poly: Poly,
}

/// Velocity kernels g(v) integrated against f.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// g = 1
    Mass,
    /// g = v
    Momentum,
    /// g = v²/2
    Energy,
    /// g = (v - v0)_+
    Hinge(f64),
    /// g = (v - v0)_- = (v0 - v)_+
    ReverseHinge(f64),
    /// g = ∫_lo^hi (v - w)_+ dw, the hinge averaged over a bin of v0 values
    BinHinge(f64, f64),
}

impl Kernel {
    /// Pieces whose sum is the kernel.
    fn pieces(self) -> [Option<Piece>; 2] {
        match self {
            Kernel::BinHinge(lo, hi) => {
                let w = hi - lo;
                [
                    // (v - lo)²/2 on [lo, hi]
                    Some(Piece { lo, hi, poly: Poly([0.5 * lo * lo, -lo, 0.5, 0.0, 0.0]) }),
                    // w (v - (lo + hi)/2) above hi
                    Some(Piece { lo: hi, hi: f64::INFINITY, poly: Poly([-0.5 * w * (lo + hi), w, 0.0, 0.0, 0.0]) }),
                ]
            }
            k => [Some(k.piece()), None],
        }
    }

    fn piece(self) -> Piece {
        let all = |poly| Piece { lo: f64::NEG_INFINITY, hi: f64::INFINITY, poly };
        match self {
            Kernel::Mass => all(Poly::ONE),
            Kernel::Momentum => all(Poly::V),
            Kernel::Energy => all(Poly([0.0, 0.0, 0.5, 0.0, 0.0])),
            Kernel::Hinge(v0) => Piece { lo: v0, hi: f64::INFINITY, poly: Poly([-v0, 1.0, 0.0, 0.0, 0.0]) },
            Kernel::ReverseHinge(v0) => Piece { lo: f64::NEG_INFINITY, hi: v0, poly: Poly([v0, -1.0, 0.0, 0.0, 0.0]) },
            Kernel::BinHinge(..) => unreachable!("bin hinge has two pieces"),
        }
    }
}

/// Extra velocity weights used by fluxes and upwind transport.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    One,
    /// v
    Velocity,
    /// v_+ = max(v, 0)
    Positive,
    /// v_- = max(-v, 0)
    Negative,
}

impl Weight {
    fn piece(self) -> Piece {
        match self {
            Weight::One => Piece { lo: f64::NEG_INFINITY, hi: f64::INFINITY, poly: Poly::ONE },
            Weight::Velocity => Piece { lo: f64::NEG_INFINITY, hi: f64::INFINITY, poly: Poly::V },
            Weight::Positive => Piece { lo: 0.0, hi: f64::INFINITY, poly: Poly::V },
            Weight::Negative => Piece { lo: f64::NEG_INFINITY, hi: 0.0, poly: Poly([0.0, -1.0, 0.0, 0.0, 0.0]) },
        }
    }
}

/// ∫_a^b weight(v) g(v) dv.
pub fn interval_integral(a: f64, b: f64, kernel: Kernel, weight: Weight) -> f64 {
    let w = weight.piece();
    let mut total = 0.0;
    for k in kernel.pieces().into_iter().flatten() {
        let lo = a.max(k.lo).max(w.lo);
        let hi = b.min(k.hi).min(w.hi);
        total += k.poly.mul(w.poly).integrate(lo, hi);
    }
    total
}

/// Upwind kinetic flux of kernel `g` through the interface between a left
/// cell `[a_l, b_l]` and a right cell `[a_r, b_r]`:
/// `∫ v_+ g χ_left dv − ∫ v_- g χ_right dv`.
pub fn upwind_flux(left: (f64, f64), right: (f64, f64), kernel: Kernel) -> f64 {
    interval_integral(left.0, left.1, kernel, Weight::Positive)
        - interval_integral(right.0, right.1, kernel, Weight::Negative)
}

/// `∫_c^d v^p dv` for `p ≤ 3`, factored so narrow intervals keep their digits.
fn power_integral(c: f64, d: f64, p: u8) -> f64 {
    let h = d - c;
    match p {
        0 => h,
        1 => h * (d + c) / 2.0,
        2 => h * (d * d + d * c + c * c) / 3.0,
        3 => h * (d + c) * (d * d + c * c) / 4.0,
        _ => unreachable!(),
    }
}

/// Upwind fluxes of mass, momentum and energy (`1, v, v²/2`) through one
/// interface; equal to [`upwind_flux`] with the three moment kernels.
pub fn moment_fluxes(left: (f64, f64), right: (f64, f64)) -> [f64; 3] {
    let (c, d) = (left.0.max(0.0), left.1.max(0.0));
    let (e, f) = (right.0.min(0.0), right.1.min(0.0));
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let p = k as u8 + 1;
        let scale = if k == 2 { 0.5 } else { 1.0 };
        *o = scale * (power_integral(c, d, p) + power_integral(e, f, p));
    }
    out
}
