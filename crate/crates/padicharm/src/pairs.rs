//! Dual pairs inside the symplectic group and their moment maps.
//!
//! Two families are implemented:
//!
//! * **general-linear pairs** `(GL_m, GL_n)`: the space is
//!   `W = Hom(V', V) + Hom(V, V')` with `dim V = m`, `dim V' = n`, the
//!   form `<(x, y), (x', y')> = tr(x y') - tr(x' y)`, the first factor
//!   acting by `g (x, y) = (g x, y g^{-1})` and the second by
//!   `g' (x, y) = (x g'^{-1}, g' y)`;
//! * **the symplectic-orthogonal pair** `(Sp_{2n}, O_1)`: here
//!   `W = Hom(V', V)` is the symplectic space itself and the orthogonal
//!   side only contributes the sign action.
//!
//! Moment maps send `w` to `tau_g(w) = xy` (resp. `w w*`) and
//! `tau_g'(w) = yx` (resp. `w* w = 0`); their defining property
//! `<e(w), w> = tr(e . tau_{g*}(w))` holds with `tau_{g*} = 2 tau_g` for
//! the general-linear pairs and `tau_{g*} = tau_g` for the
//! symplectic-orthogonal one.  The sign conventions are fixed by the
//! actions above and are unit-tested, not assumed.

use num_traits::{One, Zero};

use crate::cyclo::Rat;
use crate::error::{Error, Result};
use crate::linalg::QMat;
use crate::symplectic::SymplecticSpace;

/// Which dual pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// `(GL_m, GL_n)` acting on `Hom(V', V) + Hom(V, V')`.
    GeneralLinear { m: usize, n: usize },
    /// `(Sp_{2n}, O_1)` acting on the symplectic space itself.
    SymplecticO1 { n: usize },
}

/// A dual pair, its symplectic space, and the coordinate conventions
/// used to flatten `W` into column vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPairDescriptor {
    p: u64,
    kind: PairKind,
}

impl DualPairDescriptor {
    pub fn general_linear(p: u64, m: usize, n: usize) -> Self {
        assert!(m >= 1 && n >= 1);
        DualPairDescriptor { p, kind: PairKind::GeneralLinear { m, n } }
    }

    pub fn symplectic_o1(p: u64, n: usize) -> Self {
        assert!(n >= 1);
        DualPairDescriptor { p, kind: PairKind::SymplecticO1 { n } }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn kind(&self) -> &PairKind {
        &self.kind
    }

    /// Sizes `(dim V, dim V')` of the two modules.
    pub fn module_dims(&self) -> (usize, usize) {
        match self.kind {
            PairKind::GeneralLinear { m, n } => (m, n),
            PairKind::SymplecticO1 { n } => (2 * n, 1),
        }
    }

    /// The ambient symplectic space of the pair.
    pub fn sp(&self) -> SymplecticSpace {
        match self.kind {
            PairKind::GeneralLinear { m, n } => SymplecticSpace::new(self.p, m * n),
            PairKind::SymplecticO1 { n } => SymplecticSpace::new(self.p, n),
        }
    }

    /// Flatten `(x, y)` with `x : n -> m` and `y : m -> n` into the
    /// standard coordinates: `x_{ij}` first (row-major), then `y_{ji}`
    /// in the same `(i, j)` order, so that the trace form becomes the
    /// standard `J`.
    pub fn flatten(&self, x: &QMat, y: &QMat) -> Result<Vec<Rat>> {
        let PairKind::GeneralLinear { m, n } = self.kind else {
            return Err(Error::invalid("flatten applies to general-linear pairs"));
        };
        if x.rows() != m || x.cols() != n || y.rows() != n || y.cols() != m {
            return Err(Error::invalid("component shapes do not match the pair"));
        }
        let mut w = Vec::with_capacity(2 * m * n);
        for i in 0..m {
            for j in 0..n {
                w.push(x.at(i, j).clone());
            }
        }
        for i in 0..m {
            for j in 0..n {
                w.push(y.at(j, i).clone());
            }
        }
        Ok(w)
    }

    /// Inverse of [`DualPairDescriptor::flatten`].
    pub fn unflatten(&self, w: &[Rat]) -> Result<(QMat, QMat)> {
        let PairKind::GeneralLinear { m, n } = self.kind else {
            return Err(Error::invalid("unflatten applies to general-linear pairs"));
        };
        if w.len() != 2 * m * n {
            return Err(Error::invalid("point has the wrong dimension"));
        }
        let x = QMat::from_fn(m, n, |i, j| w[i * n + j].clone());
        let y = QMat::from_fn(n, m, |j, i| w[m * n + i * n + j].clone());
        Ok((x, y))
    }

    /// The symplectic matrix of `g` in the first factor.
    pub fn embed_g(&self, g: &QMat) -> Result<QMat> {
        match self.kind {
            PairKind::GeneralLinear { m, n } => {
                if g.rows() != m || g.cols() != m || g.det().is_zero() {
                    return Err(Error::invalid("need an invertible m x m matrix"));
                }
                let gi = g.inv()?;
                self.linear_map_matrix(m, n, |x, y| (g.mul(x), y.mul(&gi)))
            }
            PairKind::SymplecticO1 { .. } => {
                let sp = self.sp();
                if !sp.is_symplectic(g) {
                    return Err(Error::invalid("need a symplectic matrix"));
                }
                Ok(g.clone())
            }
        }
    }

    /// The symplectic matrix of `g'` in the second factor.
    pub fn embed_gprime(&self, gp: &QMat) -> Result<QMat> {
        match self.kind {
            PairKind::GeneralLinear { m, n } => {
                if gp.rows() != n || gp.cols() != n || gp.det().is_zero() {
                    return Err(Error::invalid("need an invertible n x n matrix"));
                }
                let gpi = gp.inv()?;
                self.linear_map_matrix(m, n, |x, y| (x.mul(&gpi), gp.mul(y)))
            }
            PairKind::SymplecticO1 { n } => {
                if gp.rows() != 1 || gp.cols() != 1 {
                    return Err(Error::invalid("O_1 elements are 1 x 1"));
                }
                let e = gp.at(0, 0).clone();
                if e.clone() * e.clone() != Rat::one() {
                    return Err(Error::invalid("O_1 elements square to 1"));
                }
                Ok(QMat::identity(2 * n).scale(&e))
            }
        }
    }

    /// The symplectic-algebra matrix of `z` in the first factor:
    /// `z (x, y) = (z x, -y z)` (resp. the inclusion for the pair
    /// `(Sp, O_1)`).
    pub fn embed_alg_g(&self, z: &QMat) -> Result<QMat> {
        match self.kind {
            PairKind::GeneralLinear { m, n } => {
                if z.rows() != m || z.cols() != m {
                    return Err(Error::invalid("need an m x m matrix"));
                }
                self.linear_map_matrix(m, n, |x, y| (z.mul(x), y.mul(z).neg()))
            }
            PairKind::SymplecticO1 { .. } => {
                let sp = self.sp();
                if !sp.in_algebra(z) {
                    return Err(Error::invalid("need a symplectic-algebra matrix"));
                }
                Ok(z.clone())
            }
        }
    }

    /// The symplectic-algebra matrix of `z'` in the second factor:
    /// `z' (x, y) = (-x z', z' y)`; zero for `O_1`.
    pub fn embed_alg_gprime(&self, zp: &QMat) -> Result<QMat> {
        match self.kind {
            PairKind::GeneralLinear { m, n } => {
                if zp.rows() != n || zp.cols() != n {
                    return Err(Error::invalid("need an n x n matrix"));
                }
                self.linear_map_matrix(m, n, |x, y| (x.mul(zp).neg(), zp.mul(y)))
            }
            PairKind::SymplecticO1 { n } => Ok(QMat::zeros(2 * n, 2 * n)),
        }
    }

    /// Matrix (in flattened coordinates) of a linear map given on the
    /// `(x, y)` components.
    fn linear_map_matrix(
        &self,
        m: usize,
        n: usize,
        f: impl Fn(&QMat, &QMat) -> (QMat, QMat),
    ) -> Result<QMat> {
        let dim = 2 * m * n;
        let mut out = QMat::zeros(dim, dim);
        for k in 0..dim {
            let mut e = vec![Rat::zero(); dim];
            e[k] = Rat::one();
            let (x, y) = self.unflatten(&e)?;
            let (fx, fy) = f(&x, &y);
            let col = self.flatten(&fx, &fy)?;
            for (i, c) in col.into_iter().enumerate() {
                *out.at_mut(i, k) = c;
            }
        }
        Ok(out)
    }

    /// First-factor moment map: `tau_g(x, y) = x y`, resp. `w w*` with
    /// the adjoint `w* = -w^t J` normalized so that
    /// `tr(w1 w2*) = <w1, w2>`.
    pub fn tau_g(&self, w: &[Rat]) -> Result<QMat> {
        match self.kind {
            PairKind::GeneralLinear { .. } => {
                let (x, y) = self.unflatten(w)?;
                Ok(x.mul(&y))
            }
            PairKind::SymplecticO1 { n } => {
                if w.len() != 2 * n {
                    return Err(Error::invalid("point has the wrong dimension"));
                }
                let col = QMat::from_fn(2 * n, 1, |i, _| w[i].clone());
                let row = col.transpose().mul(&self.sp().j()).neg();
                Ok(col.mul(&row))
            }
        }
    }

    /// Second-factor moment map: `tau_g'(x, y) = y x`, resp.
    /// `w* w = <w, w> = 0`.
    pub fn tau_gprime(&self, w: &[Rat]) -> Result<QMat> {
        match self.kind {
            PairKind::GeneralLinear { .. } => {
                let (x, y) = self.unflatten(w)?;
                Ok(y.mul(&x))
            }
            PairKind::SymplecticO1 { .. } => Ok(QMat::zeros(1, 1)),
        }
    }

    /// The dual-side normalizations: `<z(w), w> = tr(z . tau_{g*}(w))`
    /// holds with `tau_{g*} = scale_g() . tau_g`, and similarly on the
    /// other side (the sign on the second factor comes with the action).
    pub fn scale_g(&self) -> Rat {
        match self.kind {
            PairKind::GeneralLinear { .. } => Rat::from_integer(2.into()),
            PairKind::SymplecticO1 { .. } => Rat::one(),
        }
    }

    pub fn scale_gprime(&self) -> Rat {
        match self.kind {
            PairKind::GeneralLinear { .. } => -Rat::from_integer(2.into()),
            PairKind::SymplecticO1 { .. } => Rat::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_rat(rng: &mut ChaCha8Rng) -> Rat {
        rat(rng.gen_range(-5i64..=5), rng.gen_range(1i64..=4))
    }

    fn rand_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Rat> {
        (0..len).map(|_| rand_rat(rng)).collect()
    }

    #[test]
    fn flatten_roundtrip_and_form_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(m, n) in &[(1usize, 1usize), (1, 2), (2, 1), (2, 2)] {
            let pair = DualPairDescriptor::general_linear(3, m, n);
            let sp = pair.sp();
            for _ in 0..5 {
                let x = QMat::from_fn(m, n, |_, _| rand_rat(&mut rng));
                let y = QMat::from_fn(n, m, |_, _| rand_rat(&mut rng));
                let w = pair.flatten(&x, &y).unwrap();
                let (x2, y2) = pair.unflatten(&w).unwrap();
                assert_eq!(x, x2);
                assert_eq!(y, y2);
                let xp = QMat::from_fn(m, n, |_, _| rand_rat(&mut rng));
                let yp = QMat::from_fn(n, m, |_, _| rand_rat(&mut rng));
                let wp = pair.flatten(&xp, &yp).unwrap();
                // <(x,y),(x',y')> = tr(x y') - tr(x' y)
                let expect = x.mul(&yp).trace() - xp.mul(&y).trace();
                assert_eq!(sp.form(&w, &wp), expect, "trace form is the standard J");
            }
        }
    }

    #[test]
    fn embeddings_are_symplectic_and_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pair = DualPairDescriptor::general_linear(3, 2, 1);
        let sp = pair.sp();
        for _ in 0..6 {
            let g = loop {
                let c = QMat::from_fn(2, 2, |_, _| rand_rat(&mut rng));
                if !c.det().is_zero() {
                    break c;
                }
            };
            let gp = loop {
                let c = QMat::from_fn(1, 1, |_, _| rand_rat(&mut rng));
                if !c.det().is_zero() {
                    break c;
                }
            };
            let a = pair.embed_g(&g).unwrap();
            let b = pair.embed_gprime(&gp).unwrap();
            assert!(sp.is_symplectic(&a));
            assert!(sp.is_symplectic(&b));
            assert_eq!(a.mul(&b), b.mul(&a), "the two factors centralize each other");
        }
        // algebra embeddings land in sp and commute as well
        let z = QMat::from_fn(2, 2, |_, _| rand_rat(&mut rng));
        let zp = QMat::from_fn(1, 1, |_, _| rand_rat(&mut rng));
        let az = pair.embed_alg_g(&z).unwrap();
        let azp = pair.embed_alg_gprime(&zp).unwrap();
        assert!(sp.in_algebra(&az));
        assert!(sp.in_algebra(&azp));
        assert_eq!(az.mul(&azp), azp.mul(&az));
    }

    #[test]
    fn moment_map_defining_property_general_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(m, n) in &[(1usize, 1usize), (2, 1), (1, 2), (2, 2)] {
            let pair = DualPairDescriptor::general_linear(3, m, n);
            let sp = pair.sp();
            for _ in 0..5 {
                let w = rand_vec(&mut rng, 2 * m * n);
                let z = QMat::from_fn(m, m, |_, _| rand_rat(&mut rng));
                let zw = pair.embed_alg_g(&z).unwrap().mul_vec(&w);
                let lhs = sp.form(&zw, &w);
                let rhs = z.mul(&pair.tau_g(&w).unwrap()).trace() * pair.scale_g();
                assert_eq!(lhs, rhs, "<z(w), w> = tr(z . 2 tau_g(w))");
                let zp = QMat::from_fn(n, n, |_, _| rand_rat(&mut rng));
                let zpw = pair.embed_alg_gprime(&zp).unwrap().mul_vec(&w);
                let lhs = sp.form(&zpw, &w);
                let rhs = zp.mul(&pair.tau_gprime(&w).unwrap()).trace() * pair.scale_gprime();
                assert_eq!(lhs, rhs, "<z'(w), w> = -tr(z' . 2 tau_g'(w))");
            }
        }
    }

    #[test]
    fn moment_map_defining_property_symplectic_o1() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pair = DualPairDescriptor::symplectic_o1(3, 1);
        let sp = pair.sp();
        for _ in 0..10 {
            let w = rand_vec(&mut rng, 2);
            let tau = pair.tau_g(&w).unwrap();
            assert!(sp.in_algebra(&tau), "tau_g lands in the symplectic algebra");
            // the adjoint normalization recovers the form: tr(w1 w2*) = <w1, w2>
            let w2 = rand_vec(&mut rng, 2);
            let col1 = QMat::from_fn(2, 1, |i, _| w[i].clone());
            let row2 = QMat::from_fn(2, 1, |i, _| w2[i].clone()).transpose().mul(&sp.j()).neg();
            assert_eq!(col1.mul(&row2).trace(), sp.form(&w, &w2));
            // z in sp acts by plain composition; the pairing has no factor 2
            let z = {
                let a = rand_rat(&mut rng);
                let b = rand_rat(&mut rng);
                let c = rand_rat(&mut rng);
                QMat::new(2, 2, vec![a.clone(), b, c, -a])
            };
            let zw = z.mul_vec(&w);
            let lhs = sp.form(&zw, &w);
            let rhs = z.mul(&tau).trace() * pair.scale_g();
            assert_eq!(lhs, rhs, "<z(w), w> = tr(z . tau_g(w))");
            assert!(pair.tau_gprime(&w).unwrap().at(0, 0).is_zero(), "w* w = <w, w> = 0");
        }
    }

    #[test]
    fn moment_map_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let pair = DualPairDescriptor::general_linear(5, 2, 2);
        for _ in 0..5 {
            let w = rand_vec(&mut rng, 8);
            let g = loop {
                let c = QMat::from_fn(2, 2, |_, _| rand_rat(&mut rng));
                if !c.det().is_zero() {
                    break c;
                }
            };
            let gw = pair.embed_g(&g).unwrap().mul_vec(&w);
            let lhs = pair.tau_g(&gw).unwrap();
            let rhs = g.mul(&pair.tau_g(&w).unwrap()).mul(&g.inv().unwrap());
            assert_eq!(lhs, rhs, "tau_g(g w) = g tau_g(w) g^{{-1}}");
            // the other factor's moment map is invariant under g
            assert_eq!(
                pair.tau_gprime(&gw).unwrap(),
                pair.tau_gprime(&w).unwrap(),
                "tau_g' is G-invariant"
            );
        }
    }
}
