//! Joint trajectories: the analytic sinusoidal test motion, CSV I/O and
//! torque-profile comparison.
//!
//! CSV layout is `t,q1..qn,qd1..qdn,qdd1..qddn[,tau1..taun]` with a single
//! header line. Values are written with 17 significant digits so a
//! save/load cycle is bit-exact.

use std::cmp::Ordering;
use std::io::{Read, Write};

use nalgebra::DVector;
use thiserror::Error;

use crate::kinematics::JointState;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    /// `row` counts data rows from 1; the header is row 0.
    #[error("CSV format error at row {row}, column `{column}`: {message}")]
    CsvFormat { row: usize, column: String, message: String },
    #[error("timestamps must be strictly increasing (row {row}: {t} after {previous})")]
    NonMonotoneTime { row: usize, previous: f64, t: f64 },
    #[error("sample {index} has width {found}, expected {expected}")]
    WidthMismatch { index: usize, expected: usize, found: usize },
    #[error("timestamps differ at sample {index}: {a} vs {b}")]
    TimestampMismatch { index: usize, a: f64, b: f64 },
    #[error("trajectories have {a} and {b} samples")]
    LengthMismatch { a: usize, b: usize },
    #[error("sample {index} carries no torque column")]
    MissingTorque { index: usize },
    #[error("time {t} lies outside [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },
}

impl TrajectoryError {
    /// Misaligned but otherwise valid data, as opposed to malformed input.
    pub fn is_alignment(&self) -> bool {
        matches!(
            self,
            TrajectoryError::TimestampMismatch { .. }
                | TrajectoryError::LengthMismatch { .. }
                | TrajectoryError::OutOfSpan { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
    pub tau: Option<DVector<f64>>,
}

impl TrajectorySample {
    pub fn width(&self) -> usize {
        self.q.len()
    }

    pub fn state(&self) -> JointState {
        JointState::new(self.q.clone(), self.qd.clone(), self.qdd.clone())
    }

    fn consistent(&self, n: usize) -> bool {
        self.q.len() == n
            && self.qd.len() == n
            && self.qdd.len() == n
            && self.tau.as_ref().map_or(true, |t| t.len() == n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Checks widths and strictly increasing time.
    pub fn new(n: usize, samples: Vec<TrajectorySample>) -> Result<Self, TrajectoryError> {
        for (i, s) in samples.iter().enumerate() {
            if !s.consistent(n) {
                return Err(TrajectoryError::WidthMismatch {
                    index: i,
                    expected: n,
                    found: s.width(),
                });
            }
            if i > 0 && s.t.partial_cmp(&samples[i - 1].t) != Some(Ordering::Greater) {
                return Err(TrajectoryError::NonMonotoneTime {
                    row: i + 1,
                    previous: samples[i - 1].t,
                    t: s.t,
                });
            }
        }
        Ok(Self { n, samples })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, samples: Vec::new() }
    }

    pub fn dof(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn states(&self) -> Vec<JointState> {
        self.samples.iter().map(TrajectorySample::state).collect()
    }

    pub fn has_torque(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.tau.is_some())
    }

    /// Replaces the torque column.
    ///
    /// # Panics
    /// If the count or any width differs from the trajectory.
    pub fn with_torques(mut self, torques: Vec<DVector<f64>>) -> Self {
        assert_eq!(torques.len(), self.samples.len(), "one torque vector per sample");
        for (s, tau) in self.samples.iter_mut().zip(torques) {
            assert_eq!(tau.len(), self.n, "torque width");
            s.tau = Some(tau);
        }
        self
    }

    pub fn without_torques(mut self) -> Self {
        for s in &mut self.samples {
            s.tau = None;
        }
        self
    }
}

/// The sinusoidal test motion: odd joints follow `sin t`, even joints
/// `cos t`, with exact derivatives.
///
/// # Panics
/// If `n == 0`.
pub fn table1_trajectory(n: usize, t: f64) -> TrajectorySample {
    assert!(n >= 1, "at least one joint");
    let (s, c) = t.sin_cos();
    let pick = |odd: f64, even: f64| DVector::from_fn(n, |i, _| if i % 2 == 0 { odd } else { even });
    TrajectorySample {
        t,
        q: pick(s, c),
        qd: pick(c, -s),
        qdd: pick(-s, -c),
        tau: None,
    }
}

/// `t0 + k·dt` for `k = 0, 1, …` up to and including `t1` (with a small
/// allowance for rounding in `(t1 − t0)/dt`).
///
/// # Panics
/// If `dt` is not positive and finite or `t1 < t0`.
pub fn sample_times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0 && dt.is_finite(), "dt must be positive");
    assert!(t1 >= t0, "empty time span");
    let steps = ((t1 - t0) / dt + 1e-9).floor() as usize;
    (0..=steps).map(|k| t0 + k as f64 * dt).collect()
}

pub fn table1(n: usize, t0: f64, t1: f64, dt: f64) -> Trajectory {
    let samples = sample_times(t0, t1, dt).into_iter().map(|t| table1_trajectory(n, t)).collect();
    Trajectory { n, samples }
}

fn header(n: usize, with_tau: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["q", "qd", "qdd"].into_iter().chain(with_tau.then_some("tau")) {
        h.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    h
}

fn csv_error(row: usize, column: impl Into<String>, message: impl ToString) -> TrajectoryError {
    TrajectoryError::CsvFormat {
        row,
        column: column.into(),
        message: message.to_string(),
    }
}

/// Reads a trajectory. The joint count comes from the header.
pub fn load_csv(reader: impl Read) -> Result<Trajectory, TrajectoryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(0, "", e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let cols = names.len();
    let (n, with_tau) = match cols.checked_sub(1) {
        Some(k) if k > 0 && k % 4 == 0 && names == header(k / 4, true) => (k / 4, true),
        Some(k) if k > 0 && k % 3 == 0 && names == header(k / 3, false) => (k / 3, false),
        _ => {
            return Err(csv_error(
                0,
                names.join(","),
                "header must be t,q1..qn,qd1..qdn,qdd1..qddn[,tau1..taun]",
            ))
        }
    };

    let mut samples: Vec<TrajectorySample> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| csv_error(row, "", e))?;
        if record.len() != cols {
            return Err(csv_error(row, "", format!("expected {cols} fields, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(cols);
        for (field, name) in record.iter().zip(&names) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| csv_error(row, name.as_str(), format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(csv_error(row, name.as_str(), format!("`{field}` is not finite")));
            }
            values.push(v);
        }
        let block = |k: usize| DVector::from_column_slice(&values[1 + k * n..1 + (k + 1) * n]);
        let sample = TrajectorySample {
            t: values[0],
            q: block(0),
            qd: block(1),
            qdd: block(2),
            tau: with_tau.then(|| block(3)),
        };
        if let Some(prev) = samples.last() {
            if sample.t.partial_cmp(&prev.t) != Some(Ordering::Greater) {
                return Err(TrajectoryError::NonMonotoneTime {
                    row,
                    previous: prev.t,
                    t: sample.t,
                });
            }
        }
        samples.push(sample);
    }
    Ok(Trajectory { n, samples })
}

/// Writes a trajectory. The torque block is included when every sample has
/// one.
pub fn save_csv(traj: &Trajectory, writer: impl Write) -> std::io::Result<()> {
    let with_tau = traj.has_torque();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(header(traj.n, with_tau))?;
    let mut row = Vec::with_capacity(1 + 4 * traj.n);
    for s in &traj.samples {
        row.clear();
        row.push(fmt_f64(s.t));
        for v in [&s.q, &s.qd, &s.qdd].into_iter().chain(s.tau.as_ref().filter(|_| with_tau)) {
            row.extend(v.iter().map(|x| fmt_f64(*x)));
        }
        w.write_record(&row)?;
    }
    w.flush()
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    /// Copy of `a` with `tau = τ_a − τ_b`.
    pub trajectory: Trajectory,
    /// Per joint.
    pub max_abs: DVector<f64>,
    /// Per joint.
    pub rms: DVector<f64>,
}

impl ErrorProfile {
    pub fn max(&self) -> f64 {
        self.max_abs.iter().copied().fold(0.0, f64::max)
    }
}

fn torque(s: &TrajectorySample, index: usize) -> Result<&DVector<f64>, TrajectoryError> {
    s.tau.as_ref().ok_or(TrajectoryError::MissingTorque { index })
}

/// Sample-wise torque difference `τ_a − τ_b`. Timestamps must match
/// exactly; resample first if they do not.
pub fn error_profile(a: &Trajectory, b: &Trajectory) -> Result<ErrorProfile, TrajectoryError> {
    if a.len() != b.len() {
        return Err(TrajectoryError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.n != b.n {
        return Err(TrajectoryError::WidthMismatch {
            index: 0,
            expected: a.n,
            found: b.n,
        });
    }
    let n = a.n;
    let mut max_abs = DVector::zeros(n);
    let mut sum_sq = DVector::zeros(n);
    let mut samples = Vec::with_capacity(a.len());
    for (i, (sa, sb)) in a.samples.iter().zip(&b.samples).enumerate() {
        if sa.t != sb.t {
            return Err(TrajectoryError::TimestampMismatch { index: i, a: sa.t, b: sb.t });
        }
        let e = torque(sa, i)? - torque(sb, i)?;
        for j in 0..n {
            max_abs[j] = f64::max(max_abs[j], e[j].abs());
            sum_sq[j] += e[j] * e[j];
        }
        samples.push(TrajectorySample {
            tau: Some(e),
            ..sa.clone()
        });
    }
    let rms = if samples.is_empty() {
        sum_sq
    } else {
        sum_sq.map(|s: f64| (s / samples.len() as f64).sqrt())
    };
    Ok(ErrorProfile {
        trajectory: Trajectory { n, samples },
        max_abs,
        rms,
    })
}

fn lerp(a: &DVector<f64>, b: &DVector<f64>, w: f64) -> DVector<f64> {
    a + (b - a) * w
}

/// Componentwise linear interpolation onto `timestamps`, which must be
/// strictly increasing and inside the source span.
pub fn resample_linear(traj: &Trajectory, timestamps: &[f64]) -> Result<Trajectory, TrajectoryError> {
    let src = &traj.samples;
    let mut out = Vec::with_capacity(timestamps.len());
    for &t in timestamps {
        let (start, end) = match (src.first(), src.last()) {
            (Some(f), Some(l)) => (f.t, l.t),
            _ => return Err(TrajectoryError::OutOfSpan { t, start: f64::NAN, end: f64::NAN }),
        };
        if !(t >= start && t <= end) {
            return Err(TrajectoryError::OutOfSpan { t, start, end });
        }
        // First sample with time >= t.
        let k = src.partition_point(|s| s.t < t);
        let hi = &src[k];
        if hi.t == t {
            out.push(hi.clone());
            continue;
        }
        let lo = &src[k - 1];
        let w = (t - lo.t) / (hi.t - lo.t);
        out.push(TrajectorySample {
            t,
            q: lerp(&lo.q, &hi.q, w),
            qd: lerp(&lo.qd, &hi.qd, w),
            qdd: lerp(&lo.qdd, &hi.qdd, w),
            tau: match (&lo.tau, &hi.tau) {
                (Some(x), Some(y)) => Some(lerp(x, y, w)),
                _ => None,
            },
        });
    }
    Trajectory::new(traj.n, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn constant_tau(traj: &Trajectory, value: f64) -> Trajectory {
        let n = traj.dof();
        traj.clone().with_torques(vec![DVector::from_element(n, value); traj.len()])
    }

    #[test]
    fn table1_at_zero() {
        let s = table1_trajectory(7, 0.0);
        assert_eq!(s.q.as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.qd.as_slice(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(s.qdd.as_slice(), &[0.0, -1.0, 0.0, -1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn table1_at_quarter_period() {
        let s = table1_trajectory(7, FRAC_PI_2);
        assert_eq!(s.q[0], 1.0);
        assert!(s.q[1].abs() < 1e-16);
    }

    #[test]
    fn table1_derivatives_are_consistent() {
        let h = 1e-5;
        for k in 0..200 {
            let t = k as f64 * 0.05;
            let (m, s, p) = (table1_trajectory(5, t - h), table1_trajectory(5, t), table1_trajectory(5, t + h));
            assert!(((&p.q - &m.q) / (2.0 * h) - &s.qd).abs().max() < 1e-8);
            assert!(((&p.qd - &m.qd) / (2.0 * h) - &s.qdd).abs().max() < 1e-8);
        }
    }

    #[test]
    fn sample_count_includes_endpoint() {
        assert_eq!(sample_times(0.0, 10.0, 1e-3).len(), 10001);
        assert_eq!(sample_times(0.0, 1.0, 0.3).len(), 4);
        assert_eq!(table1(7, 0.0, 0.0, 1.0).len(), 1);
    }

    #[test]
    fn header_only_is_empty() {
        let t = load_csv("t,q1,qd1,qdd1\n".as_bytes()).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.dof(), 1);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let traj = constant_tau(&table1(7, 0.0, 0.99, 0.01), 0.1);
        assert_eq!(traj.len(), 100);
        let mut buf = Vec::new();
        save_csv(&traj, &mut buf).unwrap();
        let back = load_csv(buf.as_slice()).unwrap();
        assert_eq!(back, traj);

        let mut again = Vec::new();
        save_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
        assert!(buf.ends_with(b"\n") && !buf.contains(&b'\r'));
    }

    #[test]
    fn nan_names_row_and_column() {
        let text = "t,q1,qd1,qdd1\n0,0,0,0\n1,NaN,0,0\n";
        match load_csv(text.as_bytes()).unwrap_err() {
            TrajectoryError::CsvFormat { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "q1");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn ragged_row_is_rejected() {
        let text = "t,q1,qd1,qdd1\n0,0,0\n";
        assert!(matches!(load_csv(text.as_bytes()), Err(TrajectoryError::CsvFormat { row: 1, .. })));
    }

    #[test]
    fn bad_header_is_rejected() {
        for text in ["", "t,q1,qd1\n", "t,q1,qdd1,qd1\n", "time,q1,qd1,qdd1\n"] {
            assert!(matches!(load_csv(text.as_bytes()), Err(TrajectoryError::CsvFormat { row: 0, .. })), "{text}");
        }
    }

    #[test]
    fn time_must_increase() {
        let text = "t,q1,qd1,qdd1\n0,0,0,0\n0,0,0,0\n";
        assert!(matches!(
            load_csv(text.as_bytes()),
            Err(TrajectoryError::NonMonotoneTime { row: 2, .. })
        ));
    }

    #[test]
    fn error_profile_basics() {
        let base = table1(3, 0.0, 1.0, 0.1);
        let a = constant_tau(&base, 1.0);
        let b = constant_tau(&base, -1.0);
        let same = error_profile(&a, &a).unwrap();
        assert_eq!(same.max(), 0.0);
        let e = error_profile(&a, &b).unwrap();
        assert_eq!(e.max(), 2.0);
        assert_eq!(e.rms, DVector::from_element(3, 2.0));
        assert!(e.trajectory.samples().iter().all(|s| s.tau.as_ref().unwrap().iter().all(|&x| x == 2.0)));
    }

    #[test]
    fn error_profile_requires_exact_times() {
        let a = constant_tau(&table1(2, 0.0, 1.0, 0.1), 0.0);
        let b = constant_tau(&table1(2, 0.05, 1.05, 0.1), 0.0);
        let err = error_profile(&a, &b).unwrap_err();
        assert!(matches!(err, TrajectoryError::TimestampMismatch { index: 0, .. }));
        assert!(err.is_alignment());
        let short = constant_tau(&table1(2, 0.0, 0.5, 0.1), 0.0);
        assert!(error_profile(&a, &short).unwrap_err().is_alignment());
        assert!(matches!(
            error_profile(&a, &a.clone().without_torques()),
            Err(TrajectoryError::MissingTorque { index: 0 })
        ));
    }

    #[test]
    fn resample_identity_and_midpoint() {
        let traj = constant_tau(&table1(2, 0.0, 1.0, 0.25), 3.0);
        assert_eq!(resample_linear(&traj, &traj.times()).unwrap(), traj);

        let r = resample_linear(&traj, &[0.125]).unwrap();
        let (a, b) = (&traj.samples()[0], &traj.samples()[1]);
        assert_eq!(r.samples()[0].q, (&a.q + &b.q) * 0.5);
        assert_eq!(r.samples()[0].tau.as_ref().unwrap()[0], 3.0);
    }

    #[test]
    fn resample_rejects_out_of_span() {
        let traj = table1(2, 0.0, 1.0, 0.25);
        assert!(matches!(
            resample_linear(&traj, &[1.5]),
            Err(TrajectoryError::OutOfSpan { .. })
        ));
        assert!(resample_linear(&Trajectory::empty(2), &[0.0]).is_err());
    }

    #[test]
    fn resampling_table1_tracks_the_analytic_motion() {
        let fine = table1(7, 0.0, 10.0, 1e-3);
        let coarse_t = sample_times(0.0, 10.0, 1e-2);
        let r = resample_linear(&fine, &coarse_t).unwrap();
        for s in r.samples() {
            let exact = table1_trajectory(7, s.t);
            assert!((&s.q - &exact.q).abs().max() < 1e-4);
            assert!((&s.qdd - &exact.qdd).abs().max() < 1e-4);
        }
    }
}
