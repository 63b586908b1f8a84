use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::ProbabilityLaw;
use crate::numerics::KahanSum;
use crate::scalar::Scalar;

/// How the path starts.
#[derive(Clone, Debug, PartialEq)]
pub enum Start<T> {
    /// From `(q0, p0)`; the first wall hit is at `T0 = (1 - q0)/p0`.
    Delayed { q0: T, p0: T },
    /// From the wall at time `0`, with the first cycle drawn from `φ`.
    Undelayed,
}

/// `(q_t, p_t)` together with the number of wall hits in `(0, t]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSample<T> {
    pub t: T,
    pub q: T,
    pub p: T,
    pub n_collisions: usize,
}

/// Age `t - S_{N_t}` and residual `S_{N_t + 1} - t` of the current cycle.
///
/// Position and speed are `q = age/(age + residual)`, `p = 1/(age + residual)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrencePair<T> {
    pub age: T,
    pub residual: T,
}

impl<T: Scalar> RecurrencePair<T> {
    pub fn q(&self) -> T {
        self.age.clone() / (self.age.clone() + self.residual.clone())
    }

    pub fn p(&self) -> T {
        T::one() / (self.age.clone() + self.residual.clone())
    }
}

/// One realisation: the initial segment plus cycle durations `τ_1, τ_2, …`.
///
/// Renewal epochs are `T_n = T0 + S_n` for a delayed path and `S_n`
/// (`n ≥ 1`) for an undelayed one. The state at a renewal epoch belongs to
/// the cycle that starts there.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar> {
    start: Start<T>,
    durations: Vec<T>,
    epochs: Vec<T>,
    sum: KahanState<T>,
}

#[derive(Clone, Debug)]
struct KahanState<T: Scalar>(KahanSum<T>);

impl<T: Scalar> PartialEq for KahanState<T> {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl<T: Scalar> Trajectory<T> {
    pub fn delayed(q0: T, p0: T, durations: Vec<T>) -> Result<Self> {
        if q0.is_negative() || q0 >= T::one() {
            return Err(Error::InvalidParameter(format!("q0 = {q0:?} is not in [0, 1)")));
        }
        if !p0.is_positive() {
            return Err(Error::InvalidParameter(format!("p0 = {p0:?} must be positive")));
        }
        let t0 = (T::one() - q0.clone()) / p0.clone();
        let mut sum = KahanSum::new();
        sum.add(t0.clone());
        let mut traj = Self {
            start: Start::Delayed { q0, p0 },
            durations: Vec::new(),
            epochs: vec![t0],
            sum: KahanState(sum),
        };
        for d in durations {
            traj.push(d)?;
        }
        Ok(traj)
    }

    pub fn undelayed(durations: Vec<T>) -> Result<Self> {
        let mut traj = Self {
            start: Start::Undelayed,
            durations: Vec::new(),
            epochs: Vec::new(),
            sum: KahanState(KahanSum::new()),
        };
        for d in durations {
            traj.push(d)?;
        }
        Ok(traj)
    }

    /// Appends one cycle duration.
    pub fn push(&mut self, tau: T) -> Result<()> {
        if !tau.is_positive() {
            return Err(Error::InvalidParameter(format!("cycle duration {tau:?} must be positive")));
        }
        self.sum.0.add(tau.clone());
        self.durations.push(tau);
        self.epochs.push(self.sum.0.value());
        Ok(())
    }

    pub fn start(&self) -> &Start<T> {
        &self.start
    }

    pub fn is_delayed(&self) -> bool {
        matches!(self.start, Start::Delayed { .. })
    }

    /// `T0` for a delayed path, `0` otherwise.
    pub fn t0(&self) -> T {
        match self.start {
            Start::Delayed { .. } => self.epochs[0].clone(),
            Start::Undelayed => T::zero(),
        }
    }

    pub fn durations(&self) -> &[T] {
        &self.durations
    }

    /// Renewal epochs in increasing order.
    pub fn epochs(&self) -> &[T] {
        &self.epochs
    }

    /// Time up to which the state is determined (exclusive).
    pub fn horizon(&self) -> T {
        self.epochs.last().cloned().unwrap_or_else(T::zero)
    }

    /// Number of renewal epochs in `[0, t]` (bisection).
    pub fn renewal_count(&self, t: &T) -> usize {
        self.epochs.partition_point(|e| e <= t)
    }

    /// The undelayed-convention pair `(S_{N_t}, N_t)`: last epoch `≤ t` (or
    /// `0`) and the number of epochs in `(0, t]`.
    pub fn renewal_counts(&self, t: &T) -> (T, usize) {
        let n = self.renewal_count(t);
        let s = if n == 0 { T::zero() } else { self.epochs[n - 1].clone() };
        (s, n)
    }

    /// Start time and duration of the segment containing `t`, and its index
    /// (`0` is the initial segment of a delayed path).
    fn segment(&self, t: &T) -> Result<(T, T, usize)> {
        if t.is_negative() {
            return Err(Error::InvalidParameter("negative time".into()));
        }
        let k = self.renewal_count(t);
        if k >= self.epochs.len() {
            return Err(Error::HorizonExceeded {
                t: t.lossy_f64(),
                covered: self.horizon().lossy_f64(),
            });
        }
        let begin = if k == 0 { T::zero() } else { self.epochs[k - 1].clone() };
        let len = self.epochs[k].clone() - begin.clone();
        Ok((begin, len, k))
    }

    /// `(q_t, p_t)`.
    pub fn evaluate(&self, t: &T) -> Result<StateSample<T>> {
        let (begin, _, k) = self.segment(t)?;
        let (q, p) = match (&self.start, k) {
            (Start::Delayed { q0, p0 }, 0) => {
                ((q0.clone() + p0.clone() * t.clone()).clamp_below_one(), p0.clone())
            }
            (Start::Delayed { .. }, k) => {
                let tau = self.durations[k - 1].clone();
                ((t.clone() - begin) / tau.clone(), T::one() / tau)
            }
            (Start::Undelayed, k) => {
                let tau = self.durations[k].clone();
                ((t.clone() - begin) / tau.clone(), T::one() / tau)
            }
        };
        Ok(StateSample {
            t: t.clone(),
            q: q.clamp_below_one(),
            p,
            n_collisions: k,
        })
    }

    /// Age and residual of the cycle running at `t`.
    pub fn recurrence(&self, t: &T) -> Result<RecurrencePair<T>> {
        if let Start::Delayed { .. } = self.start {
            if *t < self.epochs[0] {
                return Err(Error::BeforeFirstRenewal {
                    t: t.lossy_f64(),
                    first: self.epochs[0].lossy_f64(),
                });
            }
        }
        let (begin, len, _) = self.segment(t)?;
        let age = t.clone() - begin.clone();
        Ok(RecurrencePair {
            residual: begin + len - t.clone(),
            age,
        })
    }

    /// The undelayed path seen from the first wall hit: cycles `τ_1, τ_2, …`
    /// starting at time `0`.
    pub fn after_first_hit(&self) -> Self {
        Self::undelayed(self.durations.clone()).expect("durations already validated")
    }

    /// The cycle running at `t` has index `n` in `durations` (`None` for
    /// the initial segment of a delayed path).
    pub fn cycle_index(&self, t: &T) -> Result<Option<usize>> {
        let (_, _, k) = self.segment(t)?;
        Ok(match self.start {
            Start::Delayed { .. } => k.checked_sub(1),
            Start::Undelayed => Some(k),
        })
    }
}

impl Trajectory<f64> {
    /// Draws cycles from `φ` until the horizon strictly exceeds `horizon`.
    pub fn extend_to<R: Rng + ?Sized>(&mut self, horizon: f64, phi: &ProbabilityLaw, rng: &mut R) {
        while self.epochs.last().is_none_or(|e| *e <= horizon) {
            let v = phi.sample(rng);
            self.push(1.0 / v).expect("speeds are positive");
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        match &self.start {
            Start::Delayed { q0, p0 } => writeln!(w, "# q0={q0:e},p0={p0:e}")?,
            Start::Undelayed => writeln!(w, "# undelayed")?,
        }
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["index", "tau", "prefix_sum"])?;
        let offset = usize::from(self.is_delayed());
        for (i, tau) in self.durations.iter().enumerate() {
            cw.write_record([
                (i + 1).to_string(),
                format!("{tau:.16e}"),
                format!("{:.16e}", self.epochs[i + offset]),
            ])?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let header = header.trim();
        let start = if header == "# undelayed" {
            Start::Undelayed
        } else if let Some(rest) = header.strip_prefix("# ") {
            let mut q0 = None;
            let mut p0 = None;
            for kv in rest.split(',') {
                match kv.split_once('=') {
                    Some(("q0", v)) => q0 = v.parse::<f64>().ok(),
                    Some(("p0", v)) => p0 = v.parse::<f64>().ok(),
                    _ => {}
                }
            }
            match (q0, p0) {
                (Some(q0), Some(p0)) => Start::Delayed { q0, p0 },
                _ => return Err(Error::InvalidParameter(format!("bad trajectory header '{header}'"))),
            }
        } else {
            return Err(Error::InvalidParameter(format!("bad trajectory header '{header}'")));
        };
        let mut taus = Vec::new();
        for rec in csv::Reader::from_reader(r).records() {
            let rec = rec?;
            let tau: f64 = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidParameter("bad tau field".into()))?;
            taus.push(tau);
        }
        match start {
            Start::Delayed { q0, p0 } => Self::delayed(q0, p0, taus),
            Start::Undelayed => Self::undelayed(taus),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Delayed path from `(q0, p0)` covering `[0, horizon]`.
pub fn simulate<R: Rng + ?Sized>(q0: f64, p0: f64, horizon: f64, phi: &ProbabilityLaw, rng: &mut R) -> Result<Trajectory<f64>> {
    let mut traj = Trajectory::delayed(q0, p0, Vec::new())?;
    traj.extend_to(horizon, phi, rng);
    Ok(traj)
}

/// Undelayed path covering `[0, horizon]`.
pub fn simulate_undelayed<R: Rng + ?Sized>(horizon: f64, phi: &ProbabilityLaw, rng: &mut R) -> Trajectory<f64> {
    let mut traj = Trajectory::undelayed(Vec::new()).expect("empty path");
    traj.extend_to(horizon, phi, rng);
    traj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_flight() {
        let tr = Trajectory::delayed(0.0, 1.0, vec![]).unwrap();
        let s = tr.evaluate(&0.5).unwrap();
        assert_eq!((s.q, s.p), (0.5, 1.0));
        assert!(tr.evaluate(&1.0).is_err());
    }

    #[test]
    fn hand_evaluation_exact() {
        let tr = Trajectory::delayed(ratio(1, 2), ratio(2, 1), vec![ratio(1, 1)]).unwrap();
        let s = tr.evaluate(&ratio(3, 4)).unwrap();
        assert_eq!(s.q, ratio(1, 2));
        assert_eq!(s.p, ratio(1, 1));
        let s = tr.evaluate(&ratio(1, 4)).unwrap();
        assert_eq!(s.q, BigRational::from_integer(0.into()));
        assert_eq!(s.n_collisions, 1);
    }

    #[test]
    fn renewal_counts_unit_cycles() {
        let tr = Trajectory::undelayed(vec![1.0; 5]).unwrap();
        assert_eq!(tr.renewal_counts(&3.5), (3.0, 3));
        let tr = Trajectory::undelayed(vec![2.0, 1.0]).unwrap();
        assert_eq!(tr.renewal_counts(&1.0), (0.0, 0));
    }

    #[test]
    fn recurrence_one_cycle() {
        let tr = Trajectory::undelayed(vec![2.0, 3.0]).unwrap();
        let r = tr.recurrence(&0.5).unwrap();
        assert_eq!((r.age, r.residual), (0.5, 1.5));
        assert_eq!(r.q(), tr.evaluate(&0.5).unwrap().q);
        let r = tr.recurrence(&2.0).unwrap();
        assert_eq!(r.age + r.residual, 3.0);
        let d = Trajectory::delayed(0.5, 1.0, vec![1.0]).unwrap();
        assert!(matches!(d.recurrence(&0.2), Err(Error::BeforeFirstRenewal { .. })));
    }

    #[test]
    fn deterministic_renewals() {
        let phi = ProbabilityLaw::dirac(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = simulate(0.25, 1.0, 20.0, &phi, &mut rng).unwrap();
        for t in [0.75, 1.0, 5.3, 19.9] {
            let (_, n) = tr.renewal_counts(&t);
            assert_eq!(n, (t - 0.75f64).floor() as usize + 1);
        }
    }

    #[test]
    fn csv_round_trip() {
        let phi = ProbabilityLaw::dyadic();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tr = simulate(0.3, 0.7, 50.0, &phi, &mut rng).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(&buf[..]).unwrap();
        assert_eq!(back.durations(), tr.durations());
        assert_eq!(back.epochs(), tr.epochs());
    }
}
