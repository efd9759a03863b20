//! The 24-element single-qubit Clifford group as signed axis permutations.
//!
//! Each element is the 3x3 rotation it induces on the Bloch vector. Elements are
//! indexed by breadth-first discovery from the identity under the X90 and Z90
//! generators, so index 0 is the identity.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Rot = [[i8; 3]; 3];

pub const GROUP_ORDER: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CliffordElement(u8);

struct Table {
    rots: Vec<Rot>,
    mul: [[u8; GROUP_ORDER]; GROUP_ORDER],
    inv: [u8; GROUP_ORDER],
    decomposition: [[u8; 3]; GROUP_ORDER],
}

fn matmul(a: &Rot, b: &Rot) -> Rot {
    let mut c = [[0i8; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

const IDENTITY: Rot = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
/// +90 degrees about x: y -> z, z -> -y.
const RX90: Rot = [[1, 0, 0], [0, 0, -1], [0, 1, 0]];
/// +90 degrees about z: x -> y, y -> -x.
const RZ90: Rot = [[0, -1, 0], [1, 0, 0], [0, 0, 1]];

fn rz_quarter(q: u8) -> Rot {
    (0..q).fold(IDENTITY, |acc, _| matmul(&RZ90, &acc))
}

fn table() -> &'static Table {
    static T: OnceLock<Table> = OnceLock::new();
    T.get_or_init(|| {
        let mut rots = vec![IDENTITY];
        let mut i = 0;
        while i < rots.len() {
            for g in [RX90, RZ90] {
                let r = matmul(&g, &rots[i]);
                if !rots.contains(&r) {
                    rots.push(r);
                }
            }
            i += 1;
        }
        assert_eq!(rots.len(), GROUP_ORDER);
        let find = |r: &Rot| rots.iter().position(|x| x == r).expect("group is closed") as u8;

        let mut mul = [[0u8; GROUP_ORDER]; GROUP_ORDER];
        let mut inv = [0u8; GROUP_ORDER];
        for a in 0..GROUP_ORDER {
            for b in 0..GROUP_ORDER {
                // a first, then b.
                mul[a][b] = find(&matmul(&rots[b], &rots[a]));
                if mul[a][b] == 0 {
                    inv[a] = b as u8;
                }
            }
        }

        // Z(γ)·X90·Z(β)·X90·Z(α) with quarter-turn angles, preferring small β.
        let mut decomposition = [[u8::MAX; 3]; GROUP_ORDER];
        for beta in [2u8, 0, 1, 3] {
            for alpha in 0..4u8 {
                for gamma in 0..4u8 {
                    let r = [rz_quarter(alpha), RX90, rz_quarter(beta), RX90, rz_quarter(gamma)]
                        .iter()
                        .fold(IDENTITY, |acc, g| matmul(g, &acc));
                    let idx = find(&r) as usize;
                    if decomposition[idx][0] == u8::MAX {
                        decomposition[idx] = [alpha, beta, gamma];
                    }
                }
            }
        }
        assert!(decomposition.iter().all(|d| d[0] != u8::MAX));
        Table { rots, mul, inv, decomposition }
    })
}

impl CliffordElement {
    pub const IDENTITY: CliffordElement = CliffordElement(0);

    pub fn from_index(i: usize) -> Option<Self> {
        (i < GROUP_ORDER).then_some(CliffordElement(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = CliffordElement> {
        (0..GROUP_ORDER as u8).map(CliffordElement)
    }

    /// Rotation matrix acting on column Bloch vectors.
    pub fn rotation(self) -> Rot {
        table().rots[self.index()]
    }

    pub fn inverse(self) -> Self {
        CliffordElement(table().inv[self.index()])
    }

    /// Pauli X: rotation by pi about x.
    pub fn x() -> Self {
        let t = table();
        CliffordElement(t.rots.iter().position(|r| *r == matmul(&RX90, &RX90)).unwrap() as u8)
    }

    pub fn apply(self, b: [f64; 3]) -> [f64; 3] {
        let r = self.rotation();
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = (0..3).map(|k| r[i][k] as f64 * b[k]).sum();
        }
        out
    }
}

/// The element obtained by applying `a` first and then `b`.
pub fn compose(a: CliffordElement, b: CliffordElement) -> CliffordElement {
    CliffordElement(table().mul[a.index()][b.index()])
}

/// Virtual-Z angles `(α, β, γ)` such that `Z(γ)·X90·Z(β)·X90·Z(α)` implements `e`.
pub fn decompose_x90_vz(e: CliffordElement) -> ([f64; 3], usize) {
    let d = table().decomposition[e.index()];
    (d.map(|q| q as f64 * FRAC_PI_2), 2)
}

/// Operation inserted after every Clifford of an interleaved sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    /// An erasure check carrying an echo X pulse.
    ErasureCheck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RBSequence {
    pub length_m: usize,
    pub elements: Vec<CliffordElement>,
    pub recovery: CliffordElement,
    pub interleave: Option<Interleave>,
    /// Number of Cliffords after which each common check runs.
    pub check_positions: Vec<usize>,
}

impl RBSequence {
    /// Net operation of the sequence including echo pulses and recovery.
    pub fn net(&self) -> CliffordElement {
        let echo = self.interleave.map(|_| CliffordElement::x());
        let mut acc = CliffordElement::IDENTITY;
        for &e in &self.elements {
            acc = compose(acc, e);
            if let Some(x) = echo {
                acc = compose(acc, x);
            }
        }
        compose(acc, self.recovery)
    }

    /// Single-line text form, parsed back by [`RBSequence::from_line`].
    pub fn to_line(&self) -> String {
        let mut s = format!("m={} elements=", self.length_m);
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{}", e.index()).unwrap();
        }
        write!(s, " recovery={} checks=", self.recovery.index()).unwrap();
        let checks: Vec<_> = self.check_positions.iter().map(|c| c.to_string()).collect();
        s.push_str(&checks.join(","));
        s.push_str(match self.interleave {
            Some(Interleave::ErasureCheck) => " interleave=check",
            None => " interleave=none",
        });
        s
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument { name: "sequence", reason: format!("{why} in `{line}`") };
        let mut fields = std::collections::HashMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("missing `=`"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing `{k}`")));
        let list = |v: &str| -> Result<Vec<usize>> {
            if v.is_empty() {
                return Ok(vec![]);
            }
            v.split(',').map(|x| x.parse::<usize>().map_err(|_| bad("bad integer"))).collect()
        };
        let elem = |i: usize| CliffordElement::from_index(i).ok_or_else(|| bad("index out of range"));
        let length_m: usize = get("m")?.parse().map_err(|_| bad("bad length"))?;
        let elements = list(get("elements")?)?.into_iter().map(elem).collect::<Result<Vec<_>>>()?;
        let recovery = elem(get("recovery")?.parse().map_err(|_| bad("bad recovery"))?)?;
        let check_positions = list(get("checks")?)?;
        let interleave = match get("interleave")? {
            "check" => Some(Interleave::ErasureCheck),
            "none" => None,
            _ => return Err(bad("unknown interleave")),
        };
        if elements.len() != length_m {
            return Err(bad("length mismatch"));
        }
        Ok(RBSequence { length_m, elements, recovery, interleave, check_positions })
    }
}

/// Random sequence of `m` Cliffords with its recovery gate.
///
/// Common checks follow every `check_every`-th Clifford, except after the last
/// one where the end-of-line check takes over. `check_every = 0` disables them.
pub fn generate_sequence(m: usize, rng_seed: u64, interleave: Option<Interleave>, check_every: usize) -> Result<RBSequence> {
    if m == 0 {
        return Err(Error::InvalidArgument { name: "m", reason: "sequence length must be at least 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let elements: Vec<_> = (0..m).map(|_| CliffordElement(rng.random_range(0..GROUP_ORDER as u8))).collect();
    let check_positions = if check_every == 0 { vec![] } else { (1..m).filter(|k| k % check_every == 0).collect() };
    let mut seq = RBSequence { length_m: m, elements, recovery: CliffordElement::IDENTITY, interleave, check_positions };
    seq.recovery = seq.net().inverse();
    Ok(seq)
}
