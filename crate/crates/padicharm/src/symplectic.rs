//! The symplectic group over `F`, its Cayley chart, the square of the
//! oscillator character, and the two-fold metaplectic cover.
//!
//! `W = F^{2n}` carries the standard form `<u, v> = u^t J v`.  The Cayley
//! transform `c(g) = (g+1)(g-1)^{-1}` identifies the open chart
//! `Sp^c = {det(g-1) != 0}` with an open piece of the Lie algebra; on that
//! chart the kernel attached to a cover point `(g, xi)` is the genuinely
//! oscillatory function `T(g, xi)(w) = xi * chi(<c(g)w, w>/4)`.
//!
//! The square `theta_squared` is defined on the whole group: it is a
//! product of one-variable Gaussian integrals driven by the determinant of
//! the pairing matrix `<(g-1)w_j, w_k>`, where `u_1..u_m` is a lattice
//! basis of `L /\ (g-1)W` and the `w_k` solve `<u_j, w_k> = delta_jk`.
//! The value is independent of both choices; the unit tests re-randomize
//! them.  Square roots are tracked explicitly: a cover element stores its
//! own `xi` with `xi^2 = theta_squared(g)`, and the product of two cover
//! elements multiplies the `xi`s by the Gaussian-integral cocycle
//! `C(g1, g2) = integral chi(<(c(g1)+c(g2))w, w>/4) dw`, which is checked
//! against the square law `C^2 = theta^2(g1 g2) / (theta^2(g1) theta^2(g2))`
//! on every call.
//!
//! All of this is exact: values are [`GaussValue`]s (root of unity times
//! `sqrt(q)`-power times a positive rational).

use num_traits::{One, Zero};

use crate::cyclo::{rat, Cyc, Rat};
use crate::error::{Error, Result};
use crate::gauss::{
    gamma_gaussian_rat, quad_integral, second_degree_character, standard_j, symplectic_gram,
    GaussValue,
};
use crate::linalg::{vp_rat, QMat};
use crate::padic::PPhase;
use crate::schwartz::SBFunction;

/// The standard symplectic space `F^{2n}` with the lattice `o^{2n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticSpace {
    p: u64,
    n: usize,
}

impl SymplecticSpace {
    pub fn new(p: u64, n: usize) -> Self {
        assert!(n >= 1, "need a nonzero space");
        SymplecticSpace { p, n }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Half the dimension: `W = F^{2n}`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// The Gram matrix of the form in the standard basis.
    pub fn j(&self) -> QMat {
        standard_j(self.n)
    }

    /// `<u, v> = u^t J v`.
    pub fn form(&self, u: &[Rat], v: &[Rat]) -> Rat {
        assert_eq!(u.len(), self.dim());
        assert_eq!(v.len(), self.dim());
        let jv = self.j().mul_vec(v);
        u.iter().zip(&jv).map(|(a, b)| a * b).sum()
    }

    /// Group membership: `g^t J g = J`.
    pub fn is_symplectic(&self, g: &QMat) -> bool {
        g.rows() == self.dim()
            && g.cols() == self.dim()
            && g.transpose().mul(&self.j()).mul(g) == self.j()
    }

    /// Algebra membership: `x^t J + J x = 0`.
    pub fn in_algebra(&self, x: &QMat) -> bool {
        x.rows() == self.dim() && x.cols() == self.dim() && symplectic_gram(x).is_ok()
    }

    /// The Cayley chart: `det(g - 1) != 0`.
    pub fn is_cayley(&self, g: &QMat) -> bool {
        !g.sub(&QMat::identity(self.dim())).det().is_zero()
    }

    fn check_group(&self, g: &QMat) -> Result<()> {
        if !self.is_symplectic(g) {
            return Err(Error::invalid("matrix does not satisfy g^t J g = J"));
        }
        Ok(())
    }
}

/// `c(g) = (g+1)(g-1)^{-1}`, defined for `det(g-1) != 0`; lands in the
/// symplectic algebra.
pub fn cayley(sp: &SymplecticSpace, g: &QMat) -> Result<QMat> {
    sp.check_group(g)?;
    let id = QMat::identity(sp.dim());
    let den = g.sub(&id);
    if den.det().is_zero() {
        return Err(Error::OffDomain("1 is an eigenvalue: g is outside the Cayley chart".into()));
    }
    let x = g.add(&id).mul(&den.inv()?);
    symplectic_gram(&x)?;
    Ok(x)
}

/// The inverse chart `c^{-1}(x) = (x+1)(x-1)^{-1}` (the Cayley map is an
/// involution), defined for `det(x-1) != 0`; lands in the group.
pub fn inverse_cayley(sp: &SymplecticSpace, x: &QMat) -> Result<QMat> {
    symplectic_gram(x)?;
    let id = QMat::identity(sp.dim());
    let den = x.sub(&id);
    if den.det().is_zero() {
        return Err(Error::OffDomain("1 is an eigenvalue of the algebra element".into()));
    }
    let g = x.add(&id).mul(&den.inv()?);
    sp.check_group(&g)?;
    Ok(g)
}

/// The determinant of the pairing matrix `<(g-1)w_j, w_k>` built from an
/// adapted basis, together with its size `m = rank(g-1)`.
///
/// `twist` perturbs the two choices made along the way — a `GL_m(o)`
/// change of the lattice basis and a shift of the dual solution by kernel
/// vectors — to let callers verify that the result does not depend on
/// them.
fn pairing_determinant(
    sp: &SymplecticSpace,
    g: &QMat,
    twist: Option<(&QMat, &QMat)>,
) -> Result<(Rat, usize)> {
    let dim = sp.dim();
    let nmat = g.sub(&QMat::identity(dim));
    let m = nmat.rank();
    if m == 0 {
        return Ok((Rat::one(), 0));
    }
    // An o-basis of L /\ (g-1)W: saturate a column basis of the image.
    let mut u = nmat.column_basis().lattice_saturate(sp.p)?;
    if let Some((t, _)) = twist {
        u = u.mul(t);
    }
    // Solve <u_j, w_k> = delta_jk; any solution works, the kernel of
    // U^t J is the radical of the pairing.
    let a = u.transpose().mul(&sp.j());
    let mut w = a.solve_right(&QMat::identity(m))?;
    if let Some((_, c)) = twist {
        let k = a.kernel();
        if k.cols() > 0 {
            if c.rows() != k.cols() || c.cols() != m {
                return Err(Error::invalid("kernel twist has the wrong shape"));
            }
            w = w.add(&k.mul(c));
        }
    }
    let s = nmat.mul(&w).transpose().mul(&sp.j()).mul(&w);
    let det = s.det();
    if det.is_zero() {
        return Err(Error::Singular("degenerate pairing matrix".into()));
    }
    Ok((det, m))
}

/// `theta_squared(g)`: the square of the oscillator character, defined on
/// the whole group as `gamma(1)^{2 dim W - 2} * gamma(det S)^2` with `S`
/// the adapted pairing matrix.  Exact; the modulus is `|det(g-1)|^{-1}`
/// whenever `g - 1` is invertible.
pub fn theta_squared(sp: &SymplecticSpace, g: &QMat) -> Result<GaussValue> {
    theta_squared_with_choices(sp, g, None)
}

/// Same value, recomputed with explicitly perturbed basis choices: `t`
/// must be in `GL_m(o)` (unimodular over the lattice) and `c` shifts the
/// dual solution along the kernel.  Exposed so callers can check choice
/// independence.
pub fn theta_squared_with_choices(
    sp: &SymplecticSpace,
    g: &QMat,
    twist: Option<(&QMat, &QMat)>,
) -> Result<GaussValue> {
    sp.check_group(g)?;
    let (det_s, _m) = pairing_determinant(sp, g, twist)?;
    let gamma1 = gamma_gaussian_rat(sp.p, &Rat::one())?;
    let gamma_s = gamma_gaussian_rat(sp.p, &det_s)?;
    Ok(gamma1.pow(2 * sp.dim() as u64 - 2).mul(&gamma_s.mul(&gamma_s)))
}

/// The canonical square root of `theta_squared(g)`: the product
/// `gamma(1)^{dim W - 1} gamma(det S)` introduces no new irrationalities,
/// and its sign is pinned by the deterministic representative of
/// `{xi, -xi}`.
pub fn canonical_theta_root(sp: &SymplecticSpace, g: &QMat) -> Result<GaussValue> {
    sp.check_group(g)?;
    let (det_s, _m) = pairing_determinant(sp, g, None)?;
    let gamma1 = gamma_gaussian_rat(sp.p, &Rat::one())?;
    let gamma_s = gamma_gaussian_rat(sp.p, &det_s)?;
    let root = gamma1.pow(sp.dim() as u64 - 1).mul(&gamma_s);
    let canonical_phase = root.phase().canonical_sign_rep();
    GaussValue::from_cyc(
        sp.p,
        &canonical_phase
            .mul(&Cyc::q_half_pow(sp.p, root.mag_exp2()))
            .scale(root.mag_unit()),
        root.k0(),
    )
}

/// A point of the metaplectic cover: a group element together with a
/// tracked square root of `theta_squared`.
#[derive(Clone, Debug)]
pub struct MetaplecticElement {
    g: QMat,
    xi: GaussValue,
}

impl MetaplecticElement {
    /// The lift of `g` on the canonical branch (`flip = false`) or the
    /// other one.
    pub fn lift(sp: &SymplecticSpace, g: &QMat, flip: bool) -> Result<MetaplecticElement> {
        let root = canonical_theta_root(sp, g)?;
        let xi = if flip { root.neg() } else { root };
        Ok(MetaplecticElement { g: g.clone(), xi })
    }

    /// Wrap an explicit pair, validating `xi^2 = theta_squared(g)`.
    pub fn from_parts(sp: &SymplecticSpace, g: QMat, xi: GaussValue) -> Result<MetaplecticElement> {
        let sq = theta_squared(sp, &g)?;
        if !xi.mul(&xi).eq_value(&sq) {
            return Err(Error::invalid("xi^2 does not equal theta_squared(g)"));
        }
        Ok(MetaplecticElement { g, xi })
    }

    pub fn g(&self) -> &QMat {
        &self.g
    }

    /// The character value `Theta` at this cover point.
    pub fn xi(&self) -> &GaussValue {
        &self.xi
    }

    /// Whether this is the non-canonical branch.
    pub fn branch(&self, sp: &SymplecticSpace) -> Result<bool> {
        let root = canonical_theta_root(sp, &self.g)?;
        if self.xi.eq_value(&root) {
            Ok(false)
        } else if self.xi.eq_value(&root.neg()) {
            Ok(true)
        } else {
            Err(Error::invalid("xi is not a square root of theta_squared(g)"))
        }
    }

    /// The same base point on the other branch.
    pub fn flipped(&self) -> MetaplecticElement {
        MetaplecticElement { g: self.g.clone(), xi: self.xi.neg() }
    }
}

/// The Gaussian-integral cocycle
/// `C(g1, g2) = integral chi(<(c(g1)+c(g2))w, w>/4) dw`, defined when
/// both elements and the sum of their Cayley images are invertible enough.
pub fn cocycle(sp: &SymplecticSpace, g1: &QMat, g2: &QMat) -> Result<GaussValue> {
    let c1 = cayley(sp, g1)?;
    let c2 = cayley(sp, g2)?;
    let m = c1.add(&c2);
    let s = symplectic_gram(&m)?;
    if s.det().is_zero() {
        return Err(Error::OffDomain(
            "c(g1) + c(g2) is singular: the cocycle Gaussian degenerates".into(),
        ));
    }
    quad_integral(sp.p, &s, &rat(1, 4))
}

/// The cover product `(g1, xi1)(g2, xi2) = (g1 g2, xi1 xi2 C(g1, g2))`.
///
/// Requires `g1`, `g2`, `g1 g2` all in the Cayley chart.  The square law
/// `C^2 = theta^2(g1 g2) / (theta^2(g1) theta^2(g2))` is re-checked
/// exactly on every call.
pub fn metaplectic_mul(
    sp: &SymplecticSpace,
    a: &MetaplecticElement,
    b: &MetaplecticElement,
) -> Result<MetaplecticElement> {
    let g12 = a.g.mul(&b.g);
    if !sp.is_cayley(&g12) {
        return Err(Error::OffDomain(
            "g1 g2 is outside the Cayley chart: the product kernel is not a function".into(),
        ));
    }
    let c = cocycle(sp, &a.g, &b.g)?;
    let lhs = c.mul(&c);
    let rhs = theta_squared(sp, &g12)?
        .div(&theta_squared(sp, &a.g)?)
        .div(&theta_squared(sp, &b.g)?);
    if !lhs.eq_value(&rhs) {
        return Err(Error::invalid("cocycle square law violated"));
    }
    let xi = a.xi.mul(&b.xi).mul(&c);
    MetaplecticElement::from_parts(sp, g12, xi)
}

/// The cover inverse `(g, xi)^{-1} = (g^{-1}, conj(xi))`.
pub fn metaplectic_inv(sp: &SymplecticSpace, a: &MetaplecticElement) -> Result<MetaplecticElement> {
    MetaplecticElement::from_parts(sp, a.g.inv()?, a.xi.conj())
}

/// Factor `g = k^{-1} (k g)` with both `k` and `k g` in the Cayley chart.
/// Returns `(k, k g)` as canonical-branch cover elements.  The chart
/// covers everything but a hypersurface, so a fixed list of candidates
/// suffices; the search is exhaustive and failure is an error.
pub fn spc_factorization(
    sp: &SymplecticSpace,
    g: &QMat,
) -> Result<(MetaplecticElement, MetaplecticElement)> {
    sp.check_group(g)?;
    let mut candidates: Vec<QMat> = Vec::new();
    let minus_one = QMat::identity(sp.dim()).neg();
    candidates.push(minus_one);
    candidates.push(sp.j());
    candidates.push(sp.j().neg());
    for t in [2i64, 3, 5, -2, -3, 7, 11, 13] {
        let tt = rat(t, 1);
        let inv_t = rat(1, t);
        let mut d = QMat::zeros(sp.dim(), sp.dim());
        for i in 0..sp.n() {
            *d.at_mut(i, i) = tt.clone();
            *d.at_mut(sp.n() + i, sp.n() + i) = inv_t.clone();
        }
        candidates.push(d);
    }
    for k in &candidates {
        if !sp.is_cayley(k) {
            continue;
        }
        let kg = k.mul(g);
        if !sp.is_cayley(&kg) {
            continue;
        }
        let k_elt = MetaplecticElement::lift(sp, k, false)?;
        let kg_elt = MetaplecticElement::lift(sp, &kg, false)?;
        return Ok((k_elt, kg_elt));
    }
    Err(Error::OffDomain(format!(
        "no candidate k with k and kg both in the Cayley chart ({} tried)",
        candidates.len()
    )))
}

/// `T(g, xi)(w) = xi * chi(<c(g)w, w>/4)` — the kernel as a function,
/// available on the Cayley chart only (elsewhere it is a measure on a
/// proper subspace).
pub fn t_eval(sp: &SymplecticSpace, a: &MetaplecticElement, w: &[Rat]) -> Result<Cyc> {
    let c = cayley(sp, &a.g)?;
    let phase = second_degree_character(sp.p, &c, w)?;
    Ok(a.xi.value().mul(&phase.to_cyc()))
}

/// `(T(a) # T(b))(w')` in closed form: the twisted convolution
/// `integral T(a)(w) T(b)(w'-w) chi(<w, w'>/2) dw` is a Gaussian with a
/// linear term; completing the square reduces it to [`quad_integral`].
pub fn t_natural_product_at(
    sp: &SymplecticSpace,
    a: &MetaplecticElement,
    b: &MetaplecticElement,
    wp: &[Rat],
) -> Result<Cyc> {
    if wp.len() != sp.dim() {
        return Err(Error::invalid("point has the wrong dimension"));
    }
    let c1 = cayley(sp, &a.g)?;
    let c2 = cayley(sp, &b.g)?;
    let s1 = symplectic_gram(&c1)?;
    let s2 = symplectic_gram(&c2)?;
    let s = s1.add(&s2);
    if s.det().is_zero() {
        return Err(Error::OffDomain(
            "c(g1) + c(g2) is singular: the product kernel is not a function".into(),
        ));
    }
    let g = quad_integral(sp.p, &s, &rat(1, 4))?;
    // linear term l^t w with l = -(S2 - J) w' / 2
    let l: Vec<Rat> = {
        let m = s2.sub(&sp.j());
        m.mul_vec(wp).into_iter().map(|r| r * rat(-1, 2)).collect()
    };
    // completed-square constant: <c2 w', w'>/4 - l^t S^{-1} l
    let c0: Rat = {
        let s2wp = s2.mul_vec(wp);
        let quad: Rat = wp.iter().zip(&s2wp).map(|(a, b)| a * b).sum();
        let sl = s.inv()?.mul_vec(&l);
        let lsl: Rat = l.iter().zip(&sl).map(|(a, b)| a * b).sum();
        quad * rat(1, 4) - lsl
    };
    let phase = PPhase::from_rat(sp.p, &c0).to_cyc();
    Ok(a.xi.value().mul(&b.xi.value()).mul(&phase).mul(&g.value()))
}

/// Twisted convolution of Bruhat-Schwartz functions on `W`:
/// `(f # g)(w') = integral f(w) g(w'-w) chi(<w, w'>/2) dw`.
pub fn twisted_convolve(
    sp: &SymplecticSpace,
    f: &SBFunction,
    g: &SBFunction,
) -> Result<SBFunction> {
    if f.p() != sp.p || g.p() != sp.p || f.dim() != sp.dim() || g.dim() != sp.dim() {
        return Err(Error::invalid("functions do not live on this symplectic space"));
    }
    use crate::cyclo::Value;
    use crate::grid::CosetGrid;
    let margin = if sp.p == 2 { 1 } else { 0 };
    let s_out = f.support_exp().max(g.support_exp());
    let m_all = f.resolution().max(g.resolution()).max(s_out + margin);
    let fr = f.refine(m_all, f.support_exp())?;
    let vol = fr.grid().cell_volume();
    let support: Vec<(Vec<Rat>, Value)> = fr
        .grid()
        .iter()
        .filter(|&flat| !fr.value(flat).is_zero())
        .map(|flat| (fr.grid().rep(flat), fr.value(flat).clone()))
        .collect();
    let out_grid = CosetGrid::new(sp.p, sp.dim(), m_all, s_out)?;
    SBFunction::from_fn(&out_grid, |z| {
        let mut acc = Value::zero();
        for (x, v) in &support {
            let diff: Vec<Rat> = z.iter().zip(x).map(|(zi, xi)| zi - xi).collect();
            let gv = g.evaluate(&diff);
            if gv.is_zero() {
                continue;
            }
            let phase = PPhase::from_rat(sp.p, &(sp.form(x, z) * rat(1, 2))).to_cyc();
            acc = acc.add(&v.mul(&gv).mul(&Value::Exact(phase)));
        }
        acc.scale(&vol)
    })
}

/// The star of the twisted convolution algebra: `f*(w) = conj(f(-w))`.
pub fn star(f: &SBFunction) -> SBFunction {
    f.reflect().conj()
}

/// `epsilon(g, xi) = xi / |xi|`: the phase of the character value.  On
/// the general-linear part of the group this is a homomorphism.
pub fn epsilon_homomorphism(a: &MetaplecticElement) -> Cyc {
    a.xi().phase().clone()
}

/// `GL_k -> Sp_{2k}`, `g -> diag(g, g^{-t})` in the standard basis.
pub fn embed_gl(g: &QMat) -> Result<QMat> {
    if !g.is_square() {
        return Err(Error::invalid("only square matrices embed"));
    }
    let k = g.rows();
    let git = g.inv()?.transpose();
    let mut out = QMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            *out.at_mut(i, j) = g.at(i, j).clone();
            *out.at_mut(k + i, k + j) = git.at(i, j).clone();
        }
    }
    Ok(out)
}

/// `|det_W(g-1)|^{-1/2}` should be the modulus of any square root of
/// `theta_squared(g)` on the Cayley chart; exposed for tests and reports.
pub fn theta_modulus_sq(sp: &SymplecticSpace, g: &QMat) -> Result<Rat> {
    let det = g.sub(&QMat::identity(sp.dim())).det();
    let v = vp_rat(&det, sp.p)
        .ok_or_else(|| Error::OffDomain("g is outside the Cayley chart".into()))?;
    Ok(crate::linalg::pow_rat(sp.p, v))
}
