//! Kinematic features of 3D pose-keypoint sequences.
//!
//! Point speeds and joint angles are computed per frame with confidence
//! masking; masked values are absent rather than zero. The center-of-mass
//! speed and the mean angular velocity then form two time series whose
//! spectra give energy, high-frequency share and spread.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// COCO-WholeBody layout.
pub const KEYPOINT_COUNT: usize = 133;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.6;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("cutoff bin {cutoff} must be below signal length {len}")]
    BadCutoff { cutoff: usize, len: usize },
    #[error("keypoint {0} out of range")]
    KeypointIndex(usize),
    #[error("frame {0} out of range")]
    FrameIndex(usize),
    #[error("invalid pose sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid joint definition `{0}`")]
    InvalidJoint(String),
}

/// `[x, y, z, confidence]` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub confidence: f64,
}

impl From<[f64; 4]> for Keypoint {
    fn from([x, y, z, confidence]: [f64; 4]) -> Self {
        Keypoint { x, y, z, confidence }
    }
}

impl From<Keypoint> for [f64; 4] {
    fn from(k: Keypoint) -> Self {
        [k.x, k.y, k.z, k.confidence]
    }
}

impl Keypoint {
    pub fn new(x: f64, y: f64, z: f64, confidence: f64) -> Self {
        Keypoint { x, y, z, confidence }
    }

    fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

pub type Frame = Vec<Keypoint>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSequence {
    pub fps: f64,
    pub person_id: String,
    pub frames: Vec<Frame>,
}

impl PoseSequence {
    pub fn new(fps: f64, person_id: impl Into<String>, frames: Vec<Frame>) -> Result<Self, KinematicsError> {
        let seq = PoseSequence {
            fps,
            person_id: person_id.into(),
            frames,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(KinematicsError::InvalidSequence(format!("fps must be positive, got {}", self.fps)));
        }
        if let Some((t, f)) = self.frames.iter().enumerate().find(|(_, f)| f.len() != KEYPOINT_COUNT) {
            return Err(KinematicsError::InvalidSequence(format!(
                "frame {t} has {} keypoints, expected {KEYPOINT_COUNT}",
                f.len()
            )));
        }
        Ok(())
    }
}

/// A joint angle measured at `vertex` between the segments to `a` and `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointDef {
    pub name: String,
    pub a: usize,
    pub vertex: usize,
    pub c: usize,
}

impl JointDef {
    pub fn new(name: &str, a: usize, vertex: usize, c: usize) -> Self {
        JointDef {
            name: name.to_string(),
            a,
            vertex,
            c,
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let ok = [self.a, self.vertex, self.c].iter().all(|&i| i < KEYPOINT_COUNT)
            && self.a != self.vertex
            && self.a != self.c
            && self.vertex != self.c;
        if ok {
            Ok(())
        } else {
            Err(KinematicsError::InvalidJoint(self.name.clone()))
        }
    }
}

/// Ten body joints over the COCO-WholeBody body and foot keypoints.
pub fn default_joints() -> Vec<JointDef> {
    // 5/6 shoulders, 7/8 elbows, 9/10 wrists, 11/12 hips, 13/14 knees,
    // 15/16 ankles, 17/20 big toes (left/right).
    vec![
        JointDef::new("left_elbow", 5, 7, 9),
        JointDef::new("right_elbow", 6, 8, 10),
        JointDef::new("left_shoulder", 7, 5, 11),
        JointDef::new("right_shoulder", 8, 6, 12),
        JointDef::new("left_hip", 5, 11, 13),
        JointDef::new("right_hip", 6, 12, 14),
        JointDef::new("left_knee", 11, 13, 15),
        JointDef::new("right_knee", 12, 14, 16),
        JointDef::new("left_ankle", 13, 15, 17),
        JointDef::new("right_ankle", 14, 16, 20),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicFrame {
    pub t: usize,
    pub point_speeds: Vec<Option<f64>>,
    pub v_cm: Option<f64>,
    pub joint_angles: BTreeMap<String, Option<f64>>,
    pub joint_angular_velocities: BTreeMap<String, Option<f64>>,
    /// Mean of the present angular velocities in this frame.
    pub omega_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub energy_v: f64,
    pub energy_w: f64,
    pub highfreq_prop_v: f64,
    pub highfreq_prop_w: f64,
    pub spectral_std_v: f64,
    pub spectral_std_w: f64,
    pub cutoff_bin: usize,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Speed of keypoint `k` between frames `t-1` and `t`. Absent when either
/// sample has confidence below `threshold`.
pub fn point_speed(seq: &PoseSequence, k: usize, t: usize, threshold: f64) -> Result<Option<f64>, KinematicsError> {
    if k >= KEYPOINT_COUNT {
        return Err(KinematicsError::KeypointIndex(k));
    }
    if t == 0 || t >= seq.frames.len() {
        return Err(KinematicsError::FrameIndex(t));
    }
    let (prev, cur) = (&seq.frames[t - 1][k], &seq.frames[t][k]);
    if prev.confidence < threshold || cur.confidence < threshold {
        return Ok(None);
    }
    Ok(Some(norm(sub(cur.position(), prev.position())) * seq.fps))
}

fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean over the present speeds.
pub fn center_of_mass_speed(frame_speeds: &[Option<f64>]) -> Option<f64> {
    mean_present(frame_speeds.iter().copied())
}

/// Angle at the vertex in radians, in `[0, π]`. Requires all three
/// keypoints above `threshold` (strictly) and non-degenerate segments.
pub fn joint_angle(frame: &[Keypoint], jd: &JointDef, threshold: f64) -> Option<f64> {
    let (a, b, c) = (frame.get(jd.a)?, frame.get(jd.vertex)?, frame.get(jd.c)?);
    if [a, b, c].iter().any(|k| k.confidence <= threshold) {
        return None;
    }
    let u = sub(a.position(), b.position());
    let v = sub(c.position(), b.position());
    if norm(u) == 0.0 || norm(v) == 0.0 {
        return None;
    }
    // Same angle as arccos of the normalized dot product, without its loss
    // of precision near 0 and π.
    Some(norm(cross(u, v)).atan2(dot(u, v)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularVelocity {
    pub per_frame: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

/// Frame-to-frame angular velocity of one joint; absent at `t = 0` and
/// wherever either angle is missing.
pub fn angular_velocity(angles: &[Option<f64>], fps: f64) -> AngularVelocity {
    let per_frame: Vec<Option<f64>> = (0..angles.len())
        .map(|t| {
            if t == 0 {
                return None;
            }
            Some((angles[t]? - angles[t - 1]?) * fps)
        })
        .collect();
    let mean = mean_present(per_frame.iter().copied());
    AngularVelocity { per_frame, mean }
}

/// Mean of the per-joint mean angular velocities.
pub fn overall_angular_velocity(per_joint: &[AngularVelocity]) -> Option<f64> {
    mean_present(per_joint.iter().map(|w| w.mean))
}

/// Forward DFT, `X[k] = Σ x[t]·exp(-2πi·k·t/T)`.
pub fn dft(signal: &[f64]) -> Result<Vec<Complex<f64>>, KinematicsError> {
    if signal.is_empty() {
        return Err(KinematicsError::EmptySignal);
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(buf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpectrum {
    pub energy: f64,
    pub highfreq_prop: f64,
    pub spectral_std: f64,
}

/// Energy, high-frequency share above bin `cutoff`, and population standard
/// deviation of the magnitude spectrum.
pub fn signal_spectrum(signal: &[f64], cutoff: usize) -> Result<SignalSpectrum, KinematicsError> {
    let spectrum = dft(signal)?;
    let len = spectrum.len();
    if cutoff >= len {
        return Err(KinematicsError::BadCutoff { cutoff, len });
    }
    let power: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
    let energy: f64 = power.iter().sum();
    let high: f64 = power[cutoff + 1..].iter().sum();
    let highfreq_prop = if energy > 0.0 { (high / energy).clamp(0.0, 1.0) } else { 0.0 };
    let mags: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();
    let mean = mags.iter().sum::<f64>() / len as f64;
    let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / len as f64;
    Ok(SignalSpectrum {
        energy,
        highfreq_prop,
        spectral_std: var.sqrt(),
    })
}

pub fn spectral_summary(v_signal: &[f64], w_signal: &[f64], cutoff_bin: usize) -> Result<SpectralSummary, KinematicsError> {
    let v = signal_spectrum(v_signal, cutoff_bin)?;
    let w = signal_spectrum(w_signal, cutoff_bin)?;
    Ok(SpectralSummary {
        energy_v: v.energy,
        energy_w: w.energy,
        highfreq_prop_v: v.highfreq_prop,
        highfreq_prop_w: w.highfreq_prop,
        spectral_std_v: v.spectral_std,
        spectral_std_w: w.spectral_std,
        cutoff_bin,
    })
}

/// Linear interpolation over absent samples; edge gaps take the nearest
/// present value. `None` when nothing is present.
pub fn fill_gaps(series: &[Option<f64>]) -> Option<Vec<f64>> {
    let present: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let (&(first_i, first_v), &(last_i, last_v)) = (present.first()?, present.last()?);
    let mut out = vec![0.0; series.len()];
    out[..=first_i].fill(first_v);
    out[last_i..].fill(last_v);
    for w in present.windows(2) {
        let ((i0, v0), (i1, v1)) = (w[0], w[1]);
        for (i, slot) in out.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let f = (i - i0) as f64 / (i1 - i0) as f64;
            *slot = v0 + (v1 - v0) * f;
        }
    }
    Some(out)
}

/// Spectral cutoff selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Cutoff {
    /// `floor(T / 4)`.
    #[default]
    Quarter,
    Bin(usize),
    /// Converted with `round(f · T / fps)`.
    Hz(f64),
}

impl Cutoff {
    pub fn resolve(self, len: usize, fps: f64) -> usize {
        match self {
            Cutoff::Quarter => len / 4,
            Cutoff::Bin(b) => b,
            Cutoff::Hz(f) => (f * len as f64 / fps).round().max(0.0) as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub person_id: String,
    /// No frame had any reliable keypoint; captioning should ignore kinematics.
    pub fallback: bool,
    pub frames: Vec<KinematicFrame>,
    pub mean_angular_velocity: BTreeMap<String, Option<f64>>,
    pub overall_angular_velocity: Option<f64>,
    pub spectral: Option<SpectralSummary>,
}

/// Per-frame kinematic dictionary plus the spectral summary of the
/// center-of-mass speed and mean angular velocity series (frames 1..T).
pub fn analyze(
    seq: &PoseSequence,
    joints: &[JointDef],
    threshold: f64,
    cutoff: Cutoff,
) -> Result<Analysis, KinematicsError> {
    seq.validate()?;
    for j in joints {
        j.validate()?;
    }
    let degenerate = !seq
        .frames
        .iter()
        .any(|f| f.iter().any(|k| k.confidence >= threshold));
    if degenerate {
        return Ok(Analysis {
            person_id: seq.person_id.clone(),
            fallback: true,
            frames: Vec::new(),
            mean_angular_velocity: BTreeMap::new(),
            overall_angular_velocity: None,
            spectral: None,
        });
    }

    let n = seq.frames.len();
    let angles: Vec<Vec<Option<f64>>> = joints
        .iter()
        .map(|j| seq.frames.iter().map(|f| joint_angle(f, j, threshold)).collect())
        .collect();
    let omegas: Vec<AngularVelocity> = angles.iter().map(|a| angular_velocity(a, seq.fps)).collect();

    let mut frames = Vec::with_capacity(n);
    for t in 0..n {
        let point_speeds: Vec<Option<f64>> = if t == 0 {
            vec![None; KEYPOINT_COUNT]
        } else {
            (0..KEYPOINT_COUNT)
                .map(|k| point_speed(seq, k, t, threshold))
                .collect::<Result<_, _>>()?
        };
        let v_cm = center_of_mass_speed(&point_speeds);
        let joint_angles = joints.iter().zip(&angles).map(|(j, a)| (j.name.clone(), a[t])).collect();
        let joint_angular_velocities = joints
            .iter()
            .zip(&omegas)
            .map(|(j, w)| (j.name.clone(), w.per_frame[t]))
            .collect();
        let omega_mean = mean_present(omegas.iter().map(|w| w.per_frame[t]));
        frames.push(KinematicFrame {
            t,
            point_speeds,
            v_cm,
            joint_angles,
            joint_angular_velocities,
            omega_mean,
        });
    }

    let spectral = if n >= 2 {
        let v: Vec<Option<f64>> = frames[1..].iter().map(|f| f.v_cm).collect();
        let w: Vec<Option<f64>> = frames[1..].iter().map(|f| f.omega_mean).collect();
        // A series with no measurable sample carries no motion energy.
        let v = fill_gaps(&v).unwrap_or_else(|| vec![0.0; n - 1]);
        let w = fill_gaps(&w).unwrap_or_else(|| vec![0.0; n - 1]);
        let bin = cutoff.resolve(n - 1, seq.fps);
        Some(spectral_summary(&v, &w, bin)?)
    } else {
        None
    };

    Ok(Analysis {
        person_id: seq.person_id.clone(),
        fallback: false,
        frames,
        mean_angular_velocity: joints.iter().zip(&omegas).map(|(j, w)| (j.name.clone(), w.mean)).collect(),
        overall_angular_velocity: overall_angular_velocity(&omegas),
        spectral,
    })
}

/// Pose input file: several people sharing one frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    pub fps: f64,
    pub persons: Vec<PersonTrack>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonTrack {
    pub person_id: String,
    pub frames: Vec<Frame>,
}

impl PoseFile {
    pub fn sequences(&self) -> Result<Vec<PoseSequence>, KinematicsError> {
        self.persons
            .iter()
            .map(|p| PoseSequence::new(self.fps, p.person_id.clone(), p.frames.clone()))
            .collect()
    }
}
