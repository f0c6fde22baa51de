use crate::error::{Error, Result};
use crate::model::QuadraticMeasurementModel;
use crate::numerics::{symmetric_eigendecomposition, Matrix, SymmetricMatrix};

/// The lifted operator H(X)(i) = Tr(Φᵢ·X) with
/// Φᵢ = [[aᵢ, bᵢᵀ/2], [bᵢ/2, Qᵢ]], so that Tr(Φᵢ·lift(x)) = h(x)(i).
#[derive(Clone, Debug, PartialEq)]
pub struct PhiOperator {
    matrices: Vec<SymmetricMatrix>,
}

impl PhiOperator {
    pub fn new(matrices: Vec<SymmetricMatrix>) -> Result<Self> {
        let order = matrices
            .first()
            .map(SymmetricMatrix::order)
            .ok_or_else(|| Error::Contract("Φ needs at least one measurement".into()))?;
        if let Some(bad) = matrices.iter().find(|p| p.order() != order) {
            return Err(Error::dim("PhiOperator order", order, bad.order()));
        }
        Ok(PhiOperator { matrices })
    }

    /// Order of the lifted matrices, n + 1.
    pub fn order(&self) -> usize {
        self.matrices[0].order()
    }

    /// Number of measurements N.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[SymmetricMatrix] {
        &self.matrices
    }

    /// H(X).
    pub fn apply(&self, x: &SymmetricMatrix) -> Result<Vec<f64>> {
        if x.order() != self.order() {
            return Err(Error::dim("apply_H", self.order(), x.order()));
        }
        Ok(self.matrices.iter().map(|p| p.frobenius_dot(x)).collect())
    }

    /// Adjoint H*(r) = Σ rᵢ·Φᵢ.
    pub fn adjoint(&self, r: &[f64]) -> Result<SymmetricMatrix> {
        if r.len() != self.len() {
            return Err(Error::dim("H adjoint", self.len(), r.len()));
        }
        let m = self.order();
        let mut out = vec![0.0; m * m];
        for (p, &ri) in self.matrices.iter().zip(r) {
            for (o, v) in out.iter_mut().zip(p.as_slice()) {
                *o += ri * v;
            }
        }
        Ok(SymmetricMatrix::symmetrized(Matrix::from_row_major(m, m, out)?))
    }

    /// Principal sub-operator on the given lifted indices.
    pub fn restrict(&self, keep: &[usize]) -> PhiOperator {
        let matrices = self
            .matrices
            .iter()
            .map(|p| {
                SymmetricMatrix::symmetrized(Matrix::from_fn(keep.len(), keep.len(), |i, j| {
                    p.get(keep[i], keep[j])
                }))
            })
            .collect();
        PhiOperator { matrices }
    }
}

/// Builds Φ₁..Φ_N from a measurement model.
pub fn lift_model(model: &QuadraticMeasurementModel) -> PhiOperator {
    let n = model.state_dim();
    let matrices = (0..model.measurement_dim())
        .map(|i| {
            let q = &model.q()[i];
            let b = model.b().row(i);
            let a = model.a()[i];
            SymmetricMatrix::symmetrized(Matrix::from_fn(n + 1, n + 1, |r, c| match (r, c) {
                (0, 0) => a,
                (0, c) => 0.5 * b[c - 1],
                (r, 0) => 0.5 * b[r - 1],
                (r, c) => q.get(r - 1, c - 1),
            }))
        })
        .collect();
    PhiOperator { matrices }
}

/// [1; x]·[1, xᵀ].
pub fn lift(x: &[f64]) -> SymmetricMatrix {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(1.0);
    v.extend_from_slice(x);
    SymmetricMatrix::outer(&v)
}

/// A lifted solution X of order n + 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix(pub SymmetricMatrix);

/// Tolerances used by [`LiftedMatrix::validate`].
pub const LIFTED_PSD_TOLERANCE: f64 = 1e-8;
pub const LIFTED_CORNER_TOLERANCE: f64 = 1e-8;

impl LiftedMatrix {
    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }

    /// Checks PSD (λ_min ≥ −1e-8) and X(1,1) = 1 (within 1e-8).
    pub fn validate(&self) -> Result<()> {
        let corner = self.0.get(0, 0);
        if (corner - 1.0).abs() > LIFTED_CORNER_TOLERANCE {
            return Err(Error::Contract(format!("lifted matrix has X(1,1) = {corner}")));
        }
        let eig = symmetric_eigendecomposition(&self.0)?;
        if eig.min_value() < -LIFTED_PSD_TOLERANCE {
            return Err(Error::Contract(format!(
                "lifted matrix is not PSD (min eigenvalue {:e})",
                eig.min_value()
            )));
        }
        Ok(())
    }
}

/// State read off a lifted solution, plus how close it is to rank one.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedState {
    /// X(2..n+1, 1).
    pub state: Vec<f64>,
    /// σ₂/σ₁ of X; 0 for an exact rank-one matrix.
    pub rank_one_ratio: f64,
}

pub fn extract_state(x: &SymmetricMatrix) -> Result<ExtractedState> {
    let m = x.order();
    if m == 0 {
        return Err(Error::Contract("empty lifted matrix".into()));
    }
    let state = (1..m).map(|i| x.get(i, 0)).collect();
    let eig = symmetric_eigendecomposition(x)?;
    let mut sv: Vec<f64> = eig.values.iter().map(|v| v.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank_one_ratio = match sv.as_slice() {
        [s1, s2, ..] if *s1 > 0.0 => s2 / s1,
        [s1, ..] if *s1 > 0.0 => 0.0,
        [] | [_] => 0.0,
        _ => f64::INFINITY,
    };
    Ok(ExtractedState {
        state,
        rank_one_ratio,
    })
}
