//! Single-shot stochastic simulation.
//!
//! The cavity field of each sector follows `dα/dt = −iε − (κ/2 + iΔ)α` and is
//! propagated with the exact one-step map `α ← α_ss + (α − α_ss)e^{−λ dt}` on a
//! fixed grid. Between stochastic events the field is a geometric sequence, so
//! window sums and the integrated dephasing hazard over a run of steps have
//! closed forms; only runs that contain an event are walked step by step.
//!
//! Jump processes (erasure, reheating, idle Pauli errors) share one merged
//! exponential clock, and probe-induced dephasing has its own clock driven by
//! the instantaneous hazard `χ_DR Im[α₀α₁*]`. Each Z kick flips the transverse
//! Bloch components, so coherence decays as `exp(−∫ 2χ_DR Im[α₀α₁*] dt)`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::channel::{ErrorChannelParams, PauliChannel};
use crate::clifford::CliffordElement;
use crate::error::{Error, Result};
use crate::params::{Bloch, DualRailState, MeasurementRecord, SystemParams};
use crate::rng::{stream, Stream};

/// Duration of one X90 pulse.
pub const X90_DURATION: f64 = 24e-9;
/// Duration of a Clifford built from two X90 pulses.
pub const CLIFFORD_DURATION: f64 = 2.0 * X90_DURATION;
/// Default integration step.
pub const DEFAULT_DT: f64 = 0.5e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activity {
    Idle,
    /// A Clifford applied at the end of the segment.
    Gate(CliffordElement),
    /// Start of a probe pulse, where measurement-induced leakage is sampled.
    ProbeOn,
    /// An echo X applied at the end of the segment.
    EchoPulse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub activity: Activity,
    /// Whether the probe tone drives the resonator during this segment.
    pub probe: bool,
    /// Apply the injected check channel at the end of this segment.
    pub inject: bool,
}

impl Segment {
    pub fn idle(duration: f64) -> Self {
        Segment { duration, activity: Activity::Idle, probe: false, inject: false }
    }

    pub fn gate(e: CliffordElement) -> Self {
        Segment { duration: CLIFFORD_DURATION, activity: Activity::Gate(e), probe: false, inject: false }
    }

    pub fn probe_on(duration: f64) -> Self {
        Segment { duration, activity: Activity::ProbeOn, probe: true, inject: false }
    }

    pub fn echo() -> Self {
        Segment { duration: CLIFFORD_DURATION, activity: Activity::EchoPulse, probe: false, inject: false }
    }

    pub fn with_probe(mut self, on: bool) -> Self {
        self.probe = on;
        self
    }

    pub fn with_inject(mut self, on: bool) -> Self {
        self.inject = on;
        self
    }
}

/// Integration window `[start, start + duration)` in seconds from the shot start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordMode {
    /// Every sample with white noise; window points integrate the noisy record.
    Full,
    /// Only window points, each with its exact Gaussian noise; no record.
    Windows,
    /// Noise-free window means, for calibration.
    Noiseless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotTimeline {
    pub segments: Vec<Segment>,
    pub rng_seed: u64,
    pub initial: DualRailState,
    pub dt: f64,
    /// Start with every field at the steady state of the first segment's drive.
    pub prefill: bool,
    pub windows: Vec<Window>,
    pub record_mode: RecordMode,
}

impl ShotTimeline {
    pub fn new(segments: Vec<Segment>, rng_seed: u64, initial: DualRailState) -> Self {
        ShotTimeline {
            segments,
            rng_seed,
            initial,
            dt: DEFAULT_DT,
            prefill: false,
            windows: vec![],
            record_mode: RecordMode::Windows,
        }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    ErasureJump,
    ReheatJump,
    LeakJump,
    LeakReturn,
    ZKick,
    BitFlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub record: Option<MeasurementRecord>,
    /// One integrated point per timeline window.
    pub points: Vec<Complex64>,
    pub final_state: DualRailState,
    pub event_log: Vec<(f64, Event)>,
}

impl ShotResult {
    pub fn contains(&self, e: Event) -> bool {
        self.event_log.iter().any(|(_, x)| *x == e)
    }
}

/// Largest step accepted for the given parameters.
pub fn max_dt(params: &SystemParams) -> f64 {
    1.0 / (20.0 * params.kappa_gg.max(params.kappa_logical))
}

/// Per-quadrature noise standard deviation of one record sample.
pub fn sample_sigma(params: &SystemParams, dt: f64) -> f64 {
    (1.0 / (4.0 * params.kappa_gg * params.eta_eff * dt)).sqrt()
}

fn steps_of(d: f64, dt: f64, what: &str) -> Result<u64> {
    let n = (d / dt).round();
    if !(d > 0.0) || !d.is_finite() || (d / dt - n).abs() > 1e-6 * n.max(1.0) || n < 1.0 {
        return Err(Error::Timeline(format!("{what} {d:e} s is not a positive multiple of dt = {dt:e} s")));
    }
    Ok(n as u64)
}

/// Which field a sector radiates.
#[derive(Clone, Copy)]
enum FieldKind {
    L0 = 0,
    L1 = 1,
    Gg = 2,
    Leak = 3,
}

#[derive(Clone, Copy, Default)]
struct Mode {
    lambda: Complex64,
    r: Complex64,
    ss: Complex64,
}

impl Mode {
    fn new(eps: f64, kappa: f64, delta: f64, dt: f64) -> Self {
        let lambda = Complex64::new(kappa / 2.0, delta);
        let ss = if eps == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, -eps) / lambda };
        Mode { lambda, r: (-lambda * dt).exp(), ss }
    }

    fn rn(&self, n: u64, dt: f64) -> Complex64 {
        (-self.lambda * (dt * n as f64)).exp()
    }
}

/// `Σ_{j<n} q^j` given `q^n`.
fn geom(q: Complex64, qn: Complex64, n: u64) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - q;
    if d.norm() < 1e-12 {
        Complex64::new(n as f64, 0.0)
    } else {
        (Complex64::new(1.0, 0.0) - qn) / d
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Sector {
    Logical,
    Erased { fast: bool },
    Leaked,
}

struct Engine<'a> {
    p: &'a SystemParams,
    dt: f64,
    modes: [[Mode; 2]; 4],
    sector: Sector,
    bloch: [f64; 3],
    f0: Complex64,
    f1: Complex64,
    fo: Complex64,
    budget_c: f64,
    budget_z: f64,
    phys: ChaCha8Rng,
    noise: ChaCha8Rng,
    sigma: f64,
    step: u64,
    events: Vec<(f64, Event)>,
    record: Option<Vec<Complex64>>,
    window_sum: Complex64,
}

#[derive(Clone, Copy, PartialEq)]
enum ConstEvent {
    Erasure,
    Reheat,
    PauliX,
    PauliY,
    PauliZ,
    LeakReturn,
}

impl<'a> Engine<'a> {
    fn mode(&self, k: FieldKind, probe: bool) -> &Mode {
        &self.modes[k as usize][probe as usize]
    }

    fn other_kind(&self) -> FieldKind {
        match self.sector {
            Sector::Leaked => FieldKind::Leak,
            _ => FieldKind::Gg,
        }
    }

    fn weights(&self) -> (f64, f64) {
        let z = self.bloch[2];
        ((1.0 + z) / 2.0, (1.0 - z) / 2.0)
    }

    fn signal(&self) -> Complex64 {
        match self.sector {
            Sector::Logical => {
                let (w0, w1) = self.weights();
                self.f0 * w0 + self.f1 * w1
            }
            _ => self.fo,
        }
    }

    fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    fn log(&mut self, e: Event) {
        let t = self.time();
        self.events.push((t, e));
    }

    fn const_rates(&self, probe: bool) -> [(ConstEvent, f64); 6] {
        let p = self.p;
        let mut out = [
            (ConstEvent::Erasure, 0.0),
            (ConstEvent::Reheat, 0.0),
            (ConstEvent::PauliX, 0.0),
            (ConstEvent::PauliY, 0.0),
            (ConstEvent::PauliZ, 0.0),
            (ConstEvent::LeakReturn, 0.0),
        ];
        match self.sector {
            Sector::Logical => {
                let (w0, w1) = self.weights();
                let deg = if probe { p.readout_degradation } else { 1.0 };
                out[0].1 = deg * (w0 / p.t_erasure_0l + w1 / p.t_erasure_1l);
                out[2].1 = 0.25 / p.t1_logical;
                out[3].1 = 0.25 / p.t1_logical;
                out[4].1 = 0.5 / p.t_phi_logical;
            }
            Sector::Erased { fast } => {
                out[1].1 = 1.0 / if fast { p.t_fast_reheat } else { p.t_heat };
            }
            Sector::Leaked => out[5].1 = 1.0 / p.t_leak_return,
        }
        out
    }

    /// Integrated Z-kick hazard over the next `n` steps.
    fn z_hazard(&self, n: u64, probe: bool) -> f64 {
        if self.sector != Sector::Logical || self.p.chi_dr == 0.0 || n == 0 {
            return 0.0;
        }
        let (m0, m1) = (self.mode(FieldKind::L0, probe), self.mode(FieldKind::L1, probe));
        let (b0, b1) = (self.f0 - m0.ss, self.f1 - m1.ss);
        let (r0n, r1n) = (m0.rn(n, self.dt), m1.rn(n, self.dt));
        let nn = Complex64::new(n as f64, 0.0);
        let sum = nn * m0.ss * m1.ss.conj()
            + m0.ss * b1.conj() * geom(m1.r.conj(), r1n.conj(), n)
            + b0 * m1.ss.conj() * geom(m0.r, r0n, n)
            + b0 * b1.conj() * geom(m0.r * m1.r.conj(), r0n * r1n.conj(), n);
        (self.p.chi_dr * sum.im * self.dt).max(0.0)
    }

    /// First step index `< limit` at which the cumulative Z hazard reaches the budget.
    fn z_scan(&self, limit: u64, probe: bool) -> Option<u64> {
        let (m0, m1) = (*self.mode(FieldKind::L0, probe), *self.mode(FieldKind::L1, probe));
        let (mut f0, mut f1) = (self.f0, self.f1);
        let mut acc = 0.0;
        let c = self.p.chi_dr * self.dt;
        for j in 0..limit {
            acc += (c * (f0 * f1.conj()).im).max(0.0);
            if acc >= self.budget_z {
                return Some(j);
            }
            f0 = m0.ss + (f0 - m0.ss) * m0.r;
            f1 = m1.ss + (f1 - m1.ss) * m1.r;
        }
        None
    }

    /// Advances `n` steps with no state change, accumulating window sums and samples.
    fn advance(&mut self, n: u64, probe: bool, in_window: bool) {
        if n == 0 {
            return;
        }
        let dt = self.dt;
        let nn = Complex64::new(n as f64, 0.0);
        if let Some(rec) = self.record.as_mut() {
            // Sample generation never feeds back into the physics.
            let sector = self.sector;
            let (w0, w1) = {
                let z = self.bloch[2];
                ((1.0 + z) / 2.0, (1.0 - z) / 2.0)
            };
            let (m0, m1) = (self.modes[FieldKind::L0 as usize][probe as usize], self.modes[FieldKind::L1 as usize][probe as usize]);
            let mo = self.modes[match sector {
                Sector::Leaked => FieldKind::Leak,
                _ => FieldKind::Gg,
            } as usize][probe as usize];
            let (mut f0, mut f1, mut fo) = (self.f0, self.f1, self.fo);
            for _ in 0..n {
                let s = match sector {
                    Sector::Logical => f0 * w0 + f1 * w1,
                    _ => fo,
                };
                let ni: f64 = self.noise.sample(StandardNormal);
                let nq: f64 = self.noise.sample(StandardNormal);
                rec.push(s + Complex64::new(ni, nq) * self.sigma);
                match sector {
                    Sector::Logical => {
                        f0 = m0.ss + (f0 - m0.ss) * m0.r;
                        f1 = m1.ss + (f1 - m1.ss) * m1.r;
                    }
                    _ => fo = mo.ss + (fo - mo.ss) * mo.r,
                }
            }
        }
        match self.sector {
            Sector::Logical => {
                let (w0, w1) = self.weights();
                let (m0, m1) = (*self.mode(FieldKind::L0, probe), *self.mode(FieldKind::L1, probe));
                let (r0n, r1n) = (m0.rn(n, dt), m1.rn(n, dt));
                let (b0, b1) = (self.f0 - m0.ss, self.f1 - m1.ss);
                if in_window {
                    let s0 = nn * m0.ss + b0 * geom(m0.r, r0n, n);
                    let s1 = nn * m1.ss + b1 * geom(m1.r, r1n, n);
                    self.window_sum += s0 * w0 + s1 * w1;
                }
                self.f0 = m0.ss + b0 * r0n;
                self.f1 = m1.ss + b1 * r1n;
            }
            _ => {
                let m = *self.mode(self.other_kind(), probe);
                let rn = m.rn(n, dt);
                let b = self.fo - m.ss;
                if in_window {
                    self.window_sum += nn * m.ss + b * geom(m.r, rn, n);
                }
                self.fo = m.ss + b * rn;
            }
        }
        self.step += n;
    }

    fn pauli(&mut self, which: usize) {
        if self.sector != Sector::Logical {
            return;
        }
        let b = &mut self.bloch;
        match which {
            0 => {
                b[1] = -b[1];
                b[2] = -b[2];
                self.log(Event::BitFlip);
            }
            1 => {
                b[0] = -b[0];
                b[2] = -b[2];
                self.log(Event::BitFlip);
            }
            _ => {
                b[0] = -b[0];
                b[1] = -b[1];
                self.log(Event::ZKick);
            }
        }
    }

    fn sample_pauli(&mut self, ch: &PauliChannel) {
        if ch.total() <= 0.0 || self.sector != Sector::Logical {
            return;
        }
        let u: f64 = self.phys.random();
        if u < ch.px {
            self.pauli(0);
        } else if u < ch.px + ch.py {
            self.pauli(1);
        } else if u < ch.total() {
            self.pauli(2);
        }
    }

    fn fire_const(&mut self, probe: bool) {
        let rates = self.const_rates(probe);
        let total: f64 = rates.iter().map(|r| r.1).sum();
        let mut u = self.phys.random::<f64>() * total;
        let mut chosen = rates[0].0;
        for (e, r) in rates {
            if r <= 0.0 {
                continue;
            }
            chosen = e;
            if u < r {
                break;
            }
            u -= r;
        }
        match chosen {
            ConstEvent::Erasure => {
                self.fo = self.signal();
                let fast = self.p.fast_reheat_prob > 0.0 && self.phys.random::<f64>() < self.p.fast_reheat_prob;
                self.sector = Sector::Erased { fast };
                self.log(Event::ErasureJump);
            }
            ConstEvent::Reheat | ConstEvent::LeakReturn => {
                self.sector = Sector::Logical;
                self.bloch = Bloch::MIXED.0;
                self.f0 = self.fo;
                self.f1 = self.fo;
                self.log(if chosen == ConstEvent::Reheat { Event::ReheatJump } else { Event::LeakReturn });
            }
            ConstEvent::PauliX => self.pauli(0),
            ConstEvent::PauliY => self.pauli(1),
            ConstEvent::PauliZ => self.pauli(2),
        }
    }

    fn run_span(&mut self, n: u64, probe: bool, in_window: bool) {
        let mut remaining = n;
        while remaining > 0 {
            let rc: f64 = self.const_rates(probe).iter().map(|r| r.1).sum();
            let kc = if rc > 0.0 {
                let k = (self.budget_c / (rc * self.dt)).floor();
                if k < remaining as f64 {
                    Some(k as u64)
                } else {
                    None
                }
            } else {
                None
            };
            let horizon = kc.unwrap_or(remaining);
            let hz = self.z_hazard(horizon, probe);
            let kz = if hz >= self.budget_z { self.z_scan(horizon, probe) } else { None };

            let (k, fire_z) = match kz {
                Some(z) if kc.is_none_or(|c| z <= c) => (z, true),
                _ => (kc.unwrap_or(remaining), false),
            };
            let consumed = if fire_z { 0.0 } else { self.z_hazard(k, probe) };
            self.advance(k, probe, in_window);
            self.budget_c -= rc * self.dt * k as f64;
            remaining -= k;
            if fire_z {
                self.pauli(2);
                self.budget_z = Exp1.sample(&mut self.phys);
            } else {
                self.budget_z -= consumed;
                if kc.is_some() {
                    self.fire_const(probe);
                    self.budget_c = Exp1.sample(&mut self.phys);
                }
            }
        }
    }
}

/// Simulates one shot of `timeline`.
///
/// The injected channel is applied at the end of every segment flagged
/// `inject`. Gate and echo segments also apply depolarizing noise of
/// infidelity `2·x90_error`.
pub fn simulate_shot(timeline: &ShotTimeline, params: &SystemParams, injected: &ErrorChannelParams) -> Result<ShotResult> {
    let dt = timeline.dt;
    let bound = max_dt(params);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { dt, bound });
    }
    let seg_steps = timeline
        .segments
        .iter()
        .map(|s| steps_of(s.duration, dt, "segment duration"))
        .collect::<Result<Vec<_>>>()?;
    let total: u64 = seg_steps.iter().sum();
    let mut windows = Vec::with_capacity(timeline.windows.len());
    for w in &timeline.windows {
        let start = if w.start == 0.0 { 0 } else { steps_of(w.start, dt, "window start")? };
        let len = steps_of(w.duration, dt, "window duration")?;
        if let Some(&(s, l)) = windows.last() {
            if start < s + l {
                return Err(Error::Timeline("windows must be sorted and non-overlapping".into()));
            }
        }
        if start + len > total {
            return Err(Error::Timeline("window extends past the end of the timeline".into()));
        }
        windows.push((start, len));
    }

    let p = params;
    let eps = p.drive_amp;
    let (d0, d1, dgg) = crate::dispersive::sector_detunings(p);
    let dleak = p.drive_detuning + p.leak_shift;
    let spec = [(p.kappa_logical, d0), (p.kappa_logical, d1), (p.kappa_gg, dgg), (p.kappa_logical, dleak)];
    let modes = spec.map(|(k, d)| [Mode::new(0.0, k, d, dt), Mode::new(eps, k, d, dt)]);

    let (sector, bloch) = match timeline.initial {
        DualRailState::Logical(b) => (Sector::Logical, b.0),
        DualRailState::Erased => (Sector::Erased { fast: false }, [0.0; 3]),
        DualRailState::Leaked => (Sector::Leaked, [0.0; 3]),
    };
    let mut phys = stream(timeline.rng_seed, Stream::Physics);
    let budget_c = Exp1.sample(&mut phys);
    let budget_z = Exp1.sample(&mut phys);
    let mut e = Engine {
        p,
        dt,
        modes,
        sector,
        bloch,
        f0: Complex64::default(),
        f1: Complex64::default(),
        fo: Complex64::default(),
        budget_c,
        budget_z,
        phys,
        noise: stream(timeline.rng_seed, Stream::Noise),
        sigma: sample_sigma(p, dt),
        step: 0,
        events: vec![],
        record: (timeline.record_mode == RecordMode::Full).then(|| Vec::with_capacity(total as usize)),
        window_sum: Complex64::default(),
    };
    if timeline.prefill {
        let probe = timeline.segments.first().is_some_and(|s| s.probe);
        e.f0 = e.mode(FieldKind::L0, probe).ss;
        e.f1 = e.mode(FieldKind::L1, probe).ss;
        e.fo = e.mode(e.other_kind(), probe).ss;
    }

    let gate_noise = PauliChannel::depolarizing(2.0 * p.x90_error);
    let inj = injected.pauli();
    let mut points = Vec::with_capacity(windows.len());
    let mut wi = 0usize;
    for (seg, &n) in timeline.segments.iter().zip(&seg_steps) {
        if seg.activity == Activity::ProbeOn
            && e.sector == Sector::Logical
            && p.mist_prob_per_check > 0.0
            && e.phys.random::<f64>() < p.mist_prob_per_check
        {
            e.fo = e.signal();
            e.sector = Sector::Leaked;
            e.log(Event::LeakJump);
        }
        let end = e.step + n;
        while e.step < end {
            let (boundary, in_window) = match windows.get(wi) {
                Some(&(s, l)) if e.step >= s => (end.min(s + l), true),
                Some(&(s, _)) => (end.min(s), false),
                None => (end, false),
            };
            e.run_span(boundary - e.step, seg.probe, in_window);
            if let Some(&(s, l)) = windows.get(wi) {
                if e.step == s + l {
                    let mean = match e.record.as_ref() {
                        Some(rec) => rec[s as usize..(s + l) as usize].iter().sum::<Complex64>() / l as f64,
                        None => {
                            let m = e.window_sum / l as f64;
                            if timeline.record_mode == RecordMode::Windows {
                                let sd = e.sigma / (l as f64).sqrt();
                                let ni: f64 = e.noise.sample(StandardNormal);
                                let nq: f64 = e.noise.sample(StandardNormal);
                                m + Complex64::new(ni, nq) * sd
                            } else {
                                m
                            }
                        }
                    };
                    points.push(mean);
                    e.window_sum = Complex64::default();
                    wi += 1;
                }
            }
        }
        match seg.activity {
            Activity::Gate(g) => {
                if e.sector == Sector::Logical {
                    e.bloch = g.apply(e.bloch);
                }
                e.sample_pauli(&gate_noise);
            }
            Activity::EchoPulse => {
                if e.sector == Sector::Logical {
                    e.bloch = CliffordElement::x().apply(e.bloch);
                }
                e.sample_pauli(&gate_noise);
            }
            _ => {}
        }
        if seg.inject {
            e.sample_pauli(&inj);
        }
    }

    let final_state = match e.sector {
        Sector::Logical => DualRailState::Logical(Bloch(e.bloch)),
        Sector::Erased { .. } => DualRailState::Erased,
        Sector::Leaked => DualRailState::Leaked,
    };
    Ok(ShotResult {
        record: e.record.map(|samples| MeasurementRecord { samples, dt, origin_time: 0.0 }),
        points,
        final_state,
        event_log: e.events,
    })
}

/// Adds white readout noise to a prescribed field trajectory.
///
/// The per-quadrature variance `1/(4κη dt)` makes the integrated SNR between
/// two constant fields equal `2κη|Δα|²T`.
pub fn generate_record(alpha_path: &[Complex64], params: &SystemParams, dt: f64, seed: u64) -> MeasurementRecord {
    let sigma = sample_sigma(params, dt);
    let mut rng = stream(seed, Stream::Noise);
    let samples = alpha_path
        .iter()
        .map(|a| {
            let ni: f64 = rng.sample(StandardNormal);
            let nq: f64 = rng.sample(StandardNormal);
            a + Complex64::new(ni, nq) * sigma
        })
        .collect();
    MeasurementRecord { samples, dt, origin_time: 0.0 }
}

/// Free decay factor of the gg-sector field a time `t` after the drive turns off.
pub fn ringdown_tail(params: &SystemParams, t: f64) -> Complex64 {
    let (_, _, dgg) = crate::dispersive::sector_detunings(params);
    (-Complex64::new(params.kappa_gg / 2.0, dgg) * t).exp()
}
