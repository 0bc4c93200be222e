//! Closed-form width exponents: `eta_pq`, `kappa`, the four-branch `theta`
//! and its dual `theta-tilde`, evaluated in exact rational arithmetic so the
//! excluded boundary cases are classified exactly.

use core::cmp::Ordering;
use core::fmt;

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// Exact rational, always reduced, positive denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rat {
    pub num: i128,
    pub den: i128,
}

impl Rat {
    pub fn new(num: i128, den: i128) -> Rat {
        assert!(den != 0, "zero denominator");
        let s = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rat {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub const ZERO: Rat = Rat { num: 0, den: 1 };
    pub const ONE: Rat = Rat { num: 1, den: 1 };

    pub fn int(n: i128) -> Rat {
        Rat { num: n, den: 1 }
    }

    pub fn add(self, o: Rat) -> Rat {
        Rat::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    pub fn sub(self, o: Rat) -> Rat {
        Rat::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }
    pub fn mul(self, o: Rat) -> Rat {
        Rat::new(self.num * o.num, self.den * o.den)
    }
    pub fn div(self, o: Rat) -> Rat {
        assert!(o.num != 0, "division by zero");
        Rat::new(self.num * o.den, self.den * o.num)
    }
    pub fn recip(self) -> Rat {
        Rat::ONE.div(self)
    }
    pub fn is_zero(self) -> bool {
        self.num == 0
    }
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, o: &Rat) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rat {
    fn cmp(&self, o: &Rat) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Lebesgue exponent in `[1, infinity]`; infinity is carried symbolically so
/// `1/p = 0` is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lp {
    Finite(Rat),
    Infinity,
}

impl Lp {
    pub fn finite(num: i128, den: i128) -> Lp {
        Lp::Finite(Rat::new(num, den))
    }

    pub fn valid(self) -> bool {
        match self {
            Lp::Finite(r) => r >= Rat::ONE,
            Lp::Infinity => true,
        }
    }

    /// `1/p`, with `1/infinity = 0`.
    pub fn inv(self) -> Rat {
        match self {
            Lp::Finite(r) => r.recip(),
            Lp::Infinity => Rat::ZERO,
        }
    }

    /// Conjugate exponent: `1/p' = 1 - 1/p`.
    pub fn conjugate(self) -> Lp {
        let i = Rat::ONE.sub(self.inv());
        if i.is_zero() {
            Lp::Infinity
        } else {
            Lp::Finite(i.recip())
        }
    }

    fn ge(self, o: Lp) -> bool {
        // p >= q iff 1/p <= 1/q
        self.inv() <= o.inv()
    }
}

impl fmt::Display for Lp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lp::Finite(r) => write!(f, "{r}"),
            Lp::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaCase {
    /// `p >= q`, or `2 <= p < q` with `r/d >= eta_pq`: theta = r/d
    Saturation,
    /// `1 <= p < q <= 2`: theta = r/d + 1/q - 1/p
    SmallQ,
    /// `1 <= p < 2 < q`, `r/d >= 1/p`: theta = r/d + 1/2 - 1/p
    Intermediate,
    /// `(p < 2 < q, r/d < 1/p)` or `(2 <= p < q, r/d < eta_pq)`:
    /// theta = (q/2)(r/d + 1/q - 1/p)
    SmallSmoothness,
}

impl ThetaCase {
    pub fn label(self) -> &'static str {
        match self {
            ThetaCase::Saturation => "p >= q",
            ThetaCase::SmallQ => "1 <= p < q <= 2",
            ThetaCase::Intermediate => "1 <= p < 2 < q, r/d >= 1/p",
            ThetaCase::SmallSmoothness => "small smoothness",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExponentReport {
    pub p: Lp,
    pub q: Lp,
    pub r: u32,
    pub d: u32,
    /// undefined when q = 2
    pub eta: Option<Rat>,
    /// undefined when r/d + 1/q - 1/p = 0
    pub kappa: Option<Rat>,
    /// undefined only for the degenerate small-smoothness case with q = inf
    pub theta: Option<Rat>,
    pub case: ThetaCase,
    pub theta_tilde: Option<Rat>,
    pub tilde_case: ThetaCase,
    /// the dual swap (p,q) -> (q', p') was applied for theta-tilde
    pub dual_swapped: bool,
    /// `r/d + 1/q - 1/p > 0`
    pub kappa_positive: bool,
    /// false on the excluded boundary `r/d = 1/p`, `1 <= p < 2 < q`
    pub off_p_boundary: bool,
    /// false on the excluded boundary `r/d = eta_pq`, `2 <= p < q`
    pub off_eta_boundary: bool,
    /// false on the excluded dual boundary `r/d = max(1/p, 1/q')`
    pub off_dual_boundary: bool,
}

fn eta_pq(p: Lp, q: Lp) -> Option<Rat> {
    let half = Rat::new(1, 2);
    let den = half.sub(q.inv());
    if den.is_zero() {
        None
    } else {
        Some(half.mul(p.inv().sub(q.inv())).div(den))
    }
}

fn theta_branch(p: Lp, q: Lp, rd: Rat) -> (ThetaCase, Option<Rat>) {
    let half = Rat::new(1, 2);
    let (ip, iq) = (p.inv(), q.inv());
    if p.ge(q) {
        return (ThetaCase::Saturation, Some(rd));
    }
    // now p < q
    if iq >= half {
        // q <= 2
        return (ThetaCase::SmallQ, Some(rd.add(iq).sub(ip)));
    }
    if ip <= half {
        // 2 <= p < q
        let eta = eta_pq(p, q).expect("q > 2 here");
        if rd >= eta {
            return (ThetaCase::Saturation, Some(rd));
        }
    } else {
        // 1 <= p < 2 < q
        if rd >= ip {
            return (ThetaCase::Intermediate, Some(rd.add(half).sub(ip)));
        }
    }
    let theta = match q {
        Lp::Finite(qr) => Some(qr.mul(half).mul(rd.add(iq).sub(ip))),
        Lp::Infinity => None,
    };
    (ThetaCase::SmallSmoothness, theta)
}

/// Full exponent case-table report in exact rational arithmetic.
pub fn theta_report(p: Lp, q: Lp, r: u32, d: u32) -> ExponentReport {
    assert!(p.valid() && q.valid(), "exponents must lie in [1, inf]");
    assert!(r >= 1 && d >= 1);
    let rd = Rat::new(r as i128, d as i128);
    let half = Rat::new(1, 2);
    let (ip, iq) = (p.inv(), q.inv());
    let eta = eta_pq(p, q);
    let gap = rd.add(iq).sub(ip);
    let kappa = if gap.is_zero() { None } else { Some(gap.recip()) };
    let (case, theta) = theta_branch(p, q, rd);
    let dual_swapped = ip.add(iq) < Rat::ONE;
    let (tp, tq) = if dual_swapped {
        (q.conjugate(), p.conjugate())
    } else {
        (p, q)
    };
    let (tilde_case, theta_tilde) = theta_branch(tp, tq, rd);
    let strict_p_range = ip < Rat::ONE && ip > half && iq < half;
    let p_ge_2_range = ip <= half && ip > iq;
    ExponentReport {
        p,
        q,
        r,
        d,
        eta,
        kappa,
        theta,
        case,
        theta_tilde,
        tilde_case,
        dual_swapped,
        kappa_positive: gap > Rat::ZERO,
        off_p_boundary: !(strict_p_range && rd == ip),
        off_eta_boundary: !(p_ge_2_range && eta == Some(rd)),
        off_dual_boundary: rd != ip.max(Rat::ONE.sub(iq)),
    }
}
