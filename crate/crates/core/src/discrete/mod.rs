//! Repeated interactions with a qubit probe, measured in the |±⟩ basis.
//!
//! The system meets a fresh probe in state σ every τ. The joint unitary is
//! V = exp{−iτ H⊗I + √τ L⊗|1⟩⟨0| − √τ L†⊗|0⟩⟨1|}, and measuring the probe
//! gives the conditional maps M_± ρ = tr_a(P_± V(ρ⊗σ)V† P_±). Joint
//! operators are indexed system-major: (s, a) ↦ 2s + a.

mod branches;
mod identities;

pub use branches::{
    enumerate_branches, gain_loss, holevo_info, GainLoss, HolevoInfo, MeasurementBranch,
    MAX_RECORD_LEN,
};
pub use identities::{
    channel_check, difference_equation_defect, entropy_inequalities, innovation_second_moment,
    ordering_identity, ChannelCheck, InequalityReport, OrderingCheck,
};

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::lindblad::OpenSystemModel;
use crate::opalg::{exp_anti_hermitian, hermitian_eig, ComplexMatrix, DensityMatrix};
use crate::real::{Real, C};

/// How the one-step unitary is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VMode {
    /// Matrix exponential through the spectrum of the generator.
    #[default]
    ExactExp,
    /// Blocks to first order in τ. Unitary only up to O(τ²).
    FirstOrder,
}

/// Outcome of one probe measurement; y = ±√τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }

    fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    /// |±⟩ = (|0⟩ ± |1⟩)/√2
    fn ket<T: Real>(self) -> [C<T>; 2] {
        let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        match self {
            Outcome::Plus => [C::new(s, T::zero()), C::new(s, T::zero())],
            Outcome::Minus => [C::new(s, T::zero()), C::new(-s, T::zero())],
        }
    }

    /// |y⟩⟨y| on the probe.
    pub fn projector<T: Real>(self) -> ComplexMatrix<T> {
        let k = self.ket::<T>();
        ComplexMatrix::outer(&k, &k)
    }
}

/// Builds V for the given generator data.
pub fn one_step_unitary<T: Real>(
    h: &ComplexMatrix<T>,
    l: &ComplexMatrix<T>,
    tau: T,
    mode: VMode,
) -> Result<ComplexMatrix<T>> {
    let d = h.dim();
    l.ensure_same_dim(h)?;
    let zero = C::new(T::zero(), T::zero());
    let st = tau.sqrt();
    let l_dag = l.adjoint();
    match mode {
        VMode::ExactExp => {
            let up = ComplexMatrix::from_fn(2, |i, j| {
                if (i, j) == (1, 0) {
                    C::new(T::one(), T::zero())
                } else {
                    zero
                }
            });
            let x = &(&h
                .kron(&ComplexMatrix::identity(2))
                .scale(C::new(T::zero(), -tau))
                + &l.kron(&up).scale_real(st))
                - &l_dag.kron(&up.adjoint()).scale_real(st);
            exp_anti_hermitian(&x)
        }
        VMode::FirstOrder => {
            let half = T::lit(0.5);
            let minus_ih = h.scale(C::new(T::zero(), -tau));
            let mut b00 = &ComplexMatrix::identity(d) + &minus_ih;
            b00.axpy_real(-half * tau, &(&l_dag * l));
            let mut b11 = &ComplexMatrix::identity(d) + &minus_ih;
            b11.axpy_real(-half * tau, &(l * &l_dag));
            let b10 = l.scale_real(st);
            let b01 = l_dag.scale_real(-st);
            Ok(ComplexMatrix::from_fn(2 * d, |r, c| {
                let (s, a, sp, ap) = (r / 2, r % 2, c / 2, c % 2);
                match (a, ap) {
                    (0, 0) => b00[(s, sp)],
                    (0, 1) => b01[(s, sp)],
                    (1, 0) => b10[(s, sp)],
                    _ => b11[(s, sp)],
                }
            }))
        }
    }
}

/// The collision model for one system and its stream of qubit probes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel<T> {
    tau: T,
    hamiltonian: ComplexMatrix<T>,
    l: ComplexMatrix<T>,
    probe_state: DensityMatrix<T>,
    mode: VMode,
    v: ComplexMatrix<T>,
    /// Kraus operators of M_+ and M_−.
    kraus: [Vec<ComplexMatrix<T>>; 2],
    tolerances: Tolerances,
}

impl<T: Real> ProbeModel<T> {
    /// Probe prepared in |0⟩⟨0|.
    pub fn new(
        hamiltonian: ComplexMatrix<T>,
        l: ComplexMatrix<T>,
        tau: T,
        mode: VMode,
    ) -> Result<Self> {
        let ground = DensityMatrix::from_diag(&[T::one(), T::zero()])?;
        Self::with_probe(hamiltonian, l, tau, mode, ground)
    }

    pub fn with_probe(
        hamiltonian: ComplexMatrix<T>,
        l: ComplexMatrix<T>,
        tau: T,
        mode: VMode,
        probe_state: DensityMatrix<T>,
    ) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::InvalidModel(format!(
                "tau must be positive, got {tau}"
            )));
        }
        if probe_state.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: probe_state.dim(),
            });
        }
        l.ensure_same_dim(&hamiltonian)?;
        let asym = hamiltonian.asymmetry();
        if asym > T::lit(1e-12) {
            return Err(Error::InvalidModel(format!(
                "Hamiltonian is not Hermitian (asymmetry {asym:.3e})"
            )));
        }
        let v = one_step_unitary(&hamiltonian, &l, tau, mode)?;
        let kraus = kraus_operators(&v, &probe_state, hamiltonian.dim())?;
        Ok(Self {
            tau,
            hamiltonian,
            l,
            probe_state,
            mode,
            v,
            kraus,
            tolerances: Tolerances::default(),
        })
    }

    /// The discrete model of a single-channel, unit-efficiency open system.
    pub fn from_open_system(model: &OpenSystemModel<T>, tau: T, mode: VMode) -> Result<Self> {
        if model.n_channels() != 1 {
            return Err(Error::InvalidModel(format!(
                "the probe model couples one collapse operator, got {}",
                model.n_channels()
            )));
        }
        if model.eta() != T::one() {
            return Err(Error::InvalidModel(format!(
                "the probe model has unit efficiency, got eta = {}",
                model.eta()
            )));
        }
        Self::new(
            model.hamiltonian().clone(),
            model.monitored().clone(),
            tau,
            mode,
        )
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_probe_state(self, probe_state: DensityMatrix<T>) -> Result<Self> {
        let tol = self.tolerances;
        Ok(
            Self::with_probe(self.hamiltonian, self.l, self.tau, self.mode, probe_state)?
                .with_tolerances(tol),
        )
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn system_dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix<T> {
        &self.hamiltonian
    }

    pub fn collapse(&self) -> &ComplexMatrix<T> {
        &self.l
    }

    pub fn probe_state(&self) -> &DensityMatrix<T> {
        &self.probe_state
    }

    pub fn mode(&self) -> VMode {
        self.mode
    }

    pub fn unitary(&self) -> &ComplexMatrix<T> {
        &self.v
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn kraus(&self, y: Outcome) -> &[ComplexMatrix<T>] {
        &self.kraus[y.index()]
    }

    /// ‖V V† − I‖_max
    pub fn unitarity_defect(&self) -> T {
        (&self.v * &self.v.adjoint()).max_abs_diff(&ComplexMatrix::identity(2 * self.system_dim()))
    }

    /// ‖Σ_y P_y† P_y − I_a‖_max
    pub fn measurement_completeness_defect(&self) -> T {
        let sum = Outcome::BOTH
            .iter()
            .fold(ComplexMatrix::zeros(2), |acc, y| {
                let p = y.projector::<T>();
                &acc + &(&p.adjoint() * &p)
            });
        sum.max_abs_diff(&ComplexMatrix::identity(2))
    }

    /// The unconditional collision model as a continuous-time model.
    pub fn open_system(&self) -> Result<OpenSystemModel<T>> {
        OpenSystemModel::single(self.hamiltonian.clone(), self.l.clone(), T::one())
    }

    /// V(ρ⊗σ)V†
    pub fn joint_state(&self, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let x = rho.kron(self.probe_state.matrix());
        &(&self.v * &x) * &self.v.adjoint()
    }
}

/// A_{y,k} = √p_k ⟨y|V|φ_k⟩ for σ = Σ_k p_k |φ_k⟩⟨φ_k|.
fn kraus_operators<T: Real>(
    v: &ComplexMatrix<T>,
    sigma: &DensityMatrix<T>,
    d: usize,
) -> Result<[Vec<ComplexMatrix<T>>; 2]> {
    let spec = hermitian_eig(sigma.matrix())?;
    let mut out: [Vec<ComplexMatrix<T>>; 2] = [Vec::new(), Vec::new()];
    for y in Outcome::BOTH {
        let bra = y.ket::<T>();
        for (k, &p) in spec.eigenvalues.iter().enumerate() {
            if !(p > T::zero()) {
                continue;
            }
            let w = p.sqrt();
            let phi = [spec.eigenvectors[(0, k)], spec.eigenvectors[(1, k)]];
            out[y.index()].push(ComplexMatrix::from_fn(d, |s, sp| {
                let mut acc = C::new(T::zero(), T::zero());
                for a in 0..2 {
                    for ap in 0..2 {
                        acc += bra[a].conj() * v[(2 * s + a, 2 * sp + ap)] * phi[ap];
                    }
                }
                acc * w
            }));
        }
    }
    Ok(out)
}

fn apply_kraus<T: Real>(ops: &[ComplexMatrix<T>], x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    ops.iter().fold(ComplexMatrix::zeros(x.dim()), |acc, a| {
        &acc + &(&(a * x) * &a.adjoint())
    })
}

/// M_y ρ (unnormalized) and its trace, the probability of y.
pub fn conditional_map<T: Real>(
    rho: &ComplexMatrix<T>,
    probe: &ProbeModel<T>,
    y: Outcome,
) -> (ComplexMatrix<T>, T) {
    let m = apply_kraus(probe.kraus(y), rho);
    let p = m.trace().re;
    (m, p)
}

/// V_s ρ = M_+ ρ + M_− ρ
pub fn unconditional_map<T: Real>(
    rho: &ComplexMatrix<T>,
    probe: &ProbeModel<T>,
) -> ComplexMatrix<T> {
    &conditional_map(rho, probe, Outcome::Plus).0 + &conditional_map(rho, probe, Outcome::Minus).0
}

/// ½ρ ± ½√τ(Lρ + ρL†): the conditional map to leading order for a probe in |0⟩.
pub fn leading_order_map<T: Real>(
    rho: &ComplexMatrix<T>,
    probe: &ProbeModel<T>,
    y: Outcome,
) -> (ComplexMatrix<T>, T) {
    let half = T::lit(0.5);
    let l = probe.collapse();
    let b = &(l * rho) + &(rho * &l.adjoint());
    let s = T::from_i8(y.sign()).expect("sign fits") * half * probe.tau().sqrt();
    let mut m = rho.scale_real(half);
    m.axpy_real(s, &b);
    let p = m.trace().re;
    (m, p)
}

/// n applications of V_s.
pub fn unconditional_power<T: Real>(
    rho: &ComplexMatrix<T>,
    probe: &ProbeModel<T>,
    n: usize,
) -> ComplexMatrix<T> {
    (0..n).fold(rho.clone(), |acc, _| unconditional_map(&acc, probe))
}
