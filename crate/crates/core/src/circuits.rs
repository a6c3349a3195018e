//! Native gate set, circuit construction, Pauli observables, and the text
//! serialization format.
//!
//! The gate set is deliberately small: `X`, `U3`, `PHASE` on one qubit and
//! `CZ`, `CNOT` on two. Folding, twirling, and the simulator all assume
//! circuits are already expressed in these gates; [`validate_native`] is the
//! checkpoint that rejects anything else.
//!
//! # Text format
//!
//! ```text
//! qubits 6
//! label spin_chain(n=6,steps=1)
//! X 1
//! CZ 0 1
//! U3 0 0.15707963267948966 0 0
//! PHASE 0 -2.6788828188792083
//! ```
//!
//! One gate per line: kind, qubit indices, then angle parameters. A trailing
//! `twirl` token marks twirl-frame gates. Angles are written with shortest
//! round-trip formatting, so parsing a serialized circuit reproduces it
//! bit-exactly. Blank lines and `#` comments are ignored. The `label` line is
//! optional.

use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds;
use crate::MAX_QUBITS;

/// Single-qubit Pauli letter. Doubles as the alphabet for observables and
/// for twirl frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// 2x2 matrix, row major.
    pub fn matrix(self) -> [Complex64; 4] {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [o, z, z, o],
            Pauli::X => [z, o, o, z],
            Pauli::Y => [z, -i, i, z],
            Pauli::Z => [o, z, z, -o],
        }
    }
}

/// Gate kinds in the native set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    X,
    U3,
    Phase,
    Cz,
    Cnot,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::U3 => "U3",
            GateKind::Phase => "PHASE",
            GateKind::Cz => "CZ",
            GateKind::Cnot => "CNOT",
        }
    }

    fn from_name(s: &str) -> Option<GateKind> {
        match s.to_ascii_uppercase().as_str() {
            "X" => Some(GateKind::X),
            "U3" => Some(GateKind::U3),
            "PHASE" => Some(GateKind::Phase),
            "CZ" => Some(GateKind::Cz),
            "CNOT" => Some(GateKind::Cnot),
            _ => None,
        }
    }

    /// Number of qubits the kind acts on.
    pub fn arity(self) -> usize {
        match self {
            GateKind::X | GateKind::U3 | GateKind::Phase => 1,
            GateKind::Cz | GateKind::Cnot => 2,
        }
    }

    /// Number of angle parameters the kind carries.
    pub fn param_count(self) -> usize {
        match self {
            GateKind::U3 => 3,
            GateKind::Phase => 1,
            _ => 0,
        }
    }
}

/// One native gate instance.
///
/// Fields are public so tests and parsers can build arbitrary (possibly
/// malformed) gates; [`validate_native`] is where structure gets enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: ArrayVec<usize, 2>,
    pub params: ArrayVec<f64, 3>,
    /// Marks gates inserted as twirl frames. Frame gates are ideal: the
    /// simulator applies their unitary but attaches no noise, and folding
    /// treats them as non-foldable padding.
    pub is_twirl_frame: bool,
}

impl Gate {
    pub fn x(q: usize) -> Gate {
        Gate {
            kind: GateKind::X,
            qubits: ArrayVec::from_iter([q]),
            params: ArrayVec::new(),
            is_twirl_frame: false,
        }
    }

    /// `U3(theta, phi, lambda)` in the standard parameterization
    /// `[[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]]`.
    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Gate {
        Gate {
            kind: GateKind::U3,
            qubits: ArrayVec::from_iter([q]),
            params: ArrayVec::from_iter([theta, phi, lambda]),
            is_twirl_frame: false,
        }
    }

    /// `PHASE(phi) = diag(1, e^{i phi})`.
    pub fn phase(q: usize, phi: f64) -> Gate {
        Gate {
            kind: GateKind::Phase,
            qubits: ArrayVec::from_iter([q]),
            params: ArrayVec::from_iter([phi]),
            is_twirl_frame: false,
        }
    }

    pub fn cz(a: usize, b: usize) -> Gate {
        Gate {
            kind: GateKind::Cz,
            qubits: ArrayVec::from_iter([a, b]),
            params: ArrayVec::new(),
            is_twirl_frame: false,
        }
    }

    /// `qubits[0]` is the control, `qubits[1]` the target.
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate {
            kind: GateKind::Cnot,
            qubits: ArrayVec::from_iter([control, target]),
            params: ArrayVec::new(),
            is_twirl_frame: false,
        }
    }

    pub fn with_twirl_frame(mut self) -> Gate {
        self.is_twirl_frame = true;
        self
    }

    pub fn arity(&self) -> usize {
        self.qubits.len()
    }

    /// The inverse gate. `X`, `CZ`, `CNOT` are self-inverse; `PHASE(phi)`
    /// inverts to `PHASE(-phi)`; `U3(t, p, l)` inverts to `U3(-t, -l, -p)`.
    pub fn dagger(&self) -> Gate {
        let mut g = self.clone();
        match self.kind {
            GateKind::X | GateKind::Cz | GateKind::Cnot => {}
            GateKind::Phase => g.params[0] = -self.params[0],
            GateKind::U3 => {
                g.params[0] = -self.params[0];
                g.params[1] = -self.params[2];
                g.params[2] = -self.params[1];
            }
        }
        g
    }

    /// Structural check for a single gate: known arity, correct parameter
    /// count, finite angles, in-bounds and distinct qubits.
    pub fn check(&self, n_qubits: usize) -> std::result::Result<(), String> {
        if self.qubits.len() != self.kind.arity() {
            return Err(format!(
                "{} acts on {} qubit(s), got {}",
                self.kind.name(),
                self.kind.arity(),
                self.qubits.len()
            ));
        }
        if self.params.len() != self.kind.param_count() {
            return Err(format!(
                "{} takes {} angle(s), got {}",
                self.kind.name(),
                self.kind.param_count(),
                self.params.len()
            ));
        }
        for &p in &self.params {
            if !p.is_finite() {
                return Err(format!("{} has non-finite angle {p}", self.kind.name()));
            }
        }
        for &q in &self.qubits {
            if q >= n_qubits {
                return Err(format!(
                    "{} addresses qubit {q} but the circuit has {n_qubits}",
                    self.kind.name()
                ));
            }
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(format!(
                "{} addresses the same qubit twice",
                self.kind.name()
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        for p in &self.params {
            write!(f, " {p}")?;
        }
        if self.is_twirl_frame {
            write!(f, " twirl")?;
        }
        Ok(())
    }
}

/// The unitary of a gate, row major over the gate's own qubits. For
/// two-qubit gates the basis index is `2 * bit(qubits[0]) + bit(qubits[1])`.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    One([Complex64; 4]),
    Two([Complex64; 16]),
}

/// Builds the unitary matrix of a native gate.
pub fn gate_unitary(gate: &Gate) -> GateMatrix {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    match gate.kind {
        GateKind::X => GateMatrix::One([z, o, o, z]),
        GateKind::Phase => {
            let phi = gate.params[0];
            GateMatrix::One([o, z, z, Complex64::from_polar(1.0, phi)])
        }
        GateKind::U3 => {
            let (t, p, l) = (gate.params[0], gate.params[1], gate.params[2]);
            let c = Complex64::new((t / 2.0).cos(), 0.0);
            let s = Complex64::new((t / 2.0).sin(), 0.0);
            GateMatrix::One([
                c,
                -Complex64::from_polar(1.0, l) * s,
                Complex64::from_polar(1.0, p) * s,
                Complex64::from_polar(1.0, p + l) * c,
            ])
        }
        GateKind::Cz => {
            let mut m = [z; 16];
            m[0] = o;
            m[5] = o;
            m[10] = o;
            m[15] = -o;
            GateMatrix::Two(m)
        }
        GateKind::Cnot => {
            let mut m = [z; 16];
            m[0] = o;
            m[5] = o;
            m[11] = o;
            m[14] = o;
            GateMatrix::Two(m)
        }
    }
}

/// A circuit over a fixed register. Gates apply in vector order.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    /// Free-form tag carried through serialization and provenance records.
    pub label: String,
}

impl Circuit {
    pub fn new(n_qubits: usize, label: impl Into<String>) -> Circuit {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            label: label.into(),
        }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    /// The inverse circuit: gates reversed and each inverted individually.
    pub fn dagger(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::dagger).collect(),
            label: format!("{}^dag", self.label),
        }
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.arity() == 2).count()
    }

    /// Circuit depth counting only two-qubit gates, by greedy layering:
    /// single-qubit gates are free, each two-qubit gate lands one layer after
    /// the later of its qubits' current layers.
    pub fn two_qubit_depth(&self) -> usize {
        let mut layer = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for g in &self.gates {
            if g.arity() == 2 {
                let d = layer[g.qubits[0]].max(layer[g.qubits[1]]) + 1;
                layer[g.qubits[0]] = d;
                layer[g.qubits[1]] = d;
                depth = depth.max(d);
            }
        }
        depth
    }

    /// Serializes to the text format documented at module level.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        if !self.label.is_empty() {
            out.push_str(&format!("label {}\n", self.label));
        }
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the text format. The result round-trips: `from_text(to_text(c))`
    /// equals `c` exactly, including angle bits and twirl markers.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut n_qubits: Option<usize> = None;
        let mut label = String::new();
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let head = tokens.next().unwrap();
            if n_qubits.is_none() {
                if !head.eq_ignore_ascii_case("qubits") {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: "expected `qubits N` header".into(),
                    });
                }
                let n = tokens
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        reason: "`qubits` needs a positive integer".into(),
                    })?;
                n_qubits = Some(n);
                continue;
            }
            if head.eq_ignore_ascii_case("label") {
                label = line[head.len()..].trim().to_string();
                continue;
            }
            let kind = GateKind::from_name(head).ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("unknown gate kind `{head}`"),
            })?;
            let mut rest: Vec<&str> = tokens.collect();
            let is_twirl_frame = rest.last().is_some_and(|t| t.eq_ignore_ascii_case("twirl"));
            if is_twirl_frame {
                rest.pop();
            }
            let (arity, n_params) = (kind.arity(), kind.param_count());
            if rest.len() != arity + n_params {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!(
                        "{} expects {} qubit(s) and {} angle(s), got {} field(s)",
                        kind.name(),
                        arity,
                        n_params,
                        rest.len()
                    ),
                });
            }
            let mut qubits = ArrayVec::new();
            for tok in &rest[..arity] {
                let q = tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("bad qubit index `{tok}`"),
                })?;
                qubits.push(q);
            }
            let mut params = ArrayVec::new();
            for tok in &rest[arity..] {
                let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("bad angle `{tok}`"),
                })?;
                params.push(v);
            }
            gates.push(Gate {
                kind,
                qubits,
                params,
                is_twirl_frame,
            });
        }
        let n_qubits = n_qubits.ok_or_else(|| Error::Parse {
            line: 1,
            reason: "missing `qubits N` header".into(),
        })?;
        let circuit = Circuit {
            n_qubits,
            gates,
            label,
        };
        validate_native(&circuit)?;
        Ok(circuit)
    }
}

/// Checks that every gate in the circuit is a well-formed native gate and
/// the register width is supported. Reports the first offending gate.
pub fn validate_native(circuit: &Circuit) -> Result<()> {
    if circuit.n_qubits == 0 || circuit.n_qubits > MAX_QUBITS {
        return Err(Error::InvalidCircuit(format!(
            "register width {} outside 1..={MAX_QUBITS}",
            circuit.n_qubits
        )));
    }
    for (index, gate) in circuit.gates.iter().enumerate() {
        gate.check(circuit.n_qubits)
            .map_err(|reason| Error::NonNativeGate { index, reason })?;
    }
    Ok(())
}

/// A signed Pauli observable, one letter per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    negated: bool,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, negated: bool) -> Result<PauliString> {
        if letters.is_empty() {
            return Err(Error::InvalidConfig("empty Pauli string".into()));
        }
        Ok(PauliString { letters, negated })
    }

    /// `Z` on every qubit.
    pub fn z_all(n_qubits: usize) -> PauliString {
        PauliString {
            letters: vec![Pauli::Z; n_qubits],
            negated: false,
        }
    }

    /// `Z` on one qubit, identity elsewhere.
    pub fn single_z(n_qubits: usize, qubit: usize) -> PauliString {
        let mut letters = vec![Pauli::I; n_qubits];
        letters[qubit] = Pauli::Z;
        PauliString {
            letters,
            negated: false,
        }
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    /// +1.0 or -1.0.
    pub fn sign(&self) -> f64 {
        if self.negated {
            -1.0
        } else {
            1.0
        }
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// True when every non-identity letter is `Z`, i.e. the observable is
    /// diagonal in the computational basis.
    pub fn is_z_diagonal(&self) -> bool {
        self.letters
            .iter()
            .all(|p| matches!(p, Pauli::I | Pauli::Z))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "-")?;
        }
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let (negated, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let letters: Option<Vec<Pauli>> = body.chars().map(Pauli::from_char).collect();
        match letters {
            Some(l) if !l.is_empty() => PauliString::new(l, negated),
            _ => Err(Error::InvalidConfig(format!(
                "`{s}` is not a Pauli string (expected letters from I, X, Y, Z)"
            ))),
        }
    }
}

// Both `Circuit` and `PauliString` serialize through their canonical text
// forms, so provenance files stay human-readable and the parser remains the
// single source of truth for structure checks.

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl serde::Serialize for Circuit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> serde::Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        Circuit::from_text(&text).map_err(serde::de::Error::custom)
    }
}

/// Parameters for the disordered spin-chain circuit family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinChainParams {
    /// Even register width in `2..=12`.
    pub n_qubits: usize,
    pub steps: usize,
    /// `U3` angles applied after every `CZ`; `[0.05 * pi, 0.0, 0.0]` gives a
    /// weakly mixing chain, all zeros a charge-conserving one.
    pub theta: [f64; 3],
    /// Seed for the per-qubit disorder phases, drawn uniformly from
    /// `[-pi, pi)` once and reused every step.
    pub disorder_seed: u64,
}

/// Builds the kicked-Ising-style spin chain: `X` on odd qubits prepares a
/// staggered state, then each step applies `CZ` on even-aligned pairs (each
/// followed by `U3(theta)` on both qubits), the same on odd-aligned pairs,
/// and a disorder `PHASE` on every qubit.
pub fn build_spin_chain_circuit(p: &SpinChainParams) -> Result<Circuit> {
    let n = p.n_qubits;
    if !(2..=MAX_QUBITS).contains(&n) || !n.is_multiple_of(2) {
        return Err(Error::InvalidCircuit(format!(
            "spin chain needs an even register in 2..={MAX_QUBITS}, got {n}"
        )));
    }
    for t in p.theta {
        if !t.is_finite() {
            return Err(Error::InvalidCircuit("non-finite theta".into()));
        }
    }
    let mut rng = seeds::rng_from(p.disorder_seed);
    let phases: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();

    let mut c = Circuit::new(n, format!("spin_chain(n={n},steps={})", p.steps));
    for q in (1..n).step_by(2) {
        c.push(Gate::x(q));
    }
    let [t1, t2, t3] = p.theta;
    for _ in 0..p.steps {
        for a in (0..n - 1).step_by(2) {
            c.push(Gate::cz(a, a + 1));
            c.push(Gate::u3(a, t1, t2, t3));
            c.push(Gate::u3(a + 1, t1, t2, t3));
        }
        for a in (1..n - 1).step_by(2) {
            c.push(Gate::cz(a, a + 1));
            c.push(Gate::u3(a, t1, t2, t3));
            c.push(Gate::u3(a + 1, t1, t2, t3));
        }
        for (q, &ph) in phases.iter().enumerate() {
            c.push(Gate::phase(q, ph));
        }
    }
    Ok(c)
}

/// Builds a brickwork entangling circuit with exactly `total_2q` two-qubit
/// gates of the given kind: alternating even-aligned and odd-aligned layers,
/// truncating the final layer. Used by the fold-variance studies, where the
/// two-qubit gate count is the controlled variable.
pub fn build_brickwork_circuit(n_qubits: usize, total_2q: usize, kind: GateKind) -> Result<Circuit> {
    if !(2..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::InvalidCircuit(format!(
            "brickwork needs a register in 2..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    if kind.arity() != 2 {
        return Err(Error::InvalidCircuit(format!(
            "brickwork layers need a two-qubit kind, got {}",
            kind.name()
        )));
    }
    let make = |a: usize| match kind {
        GateKind::Cz => Gate::cz(a, a + 1),
        GateKind::Cnot => Gate::cnot(a, a + 1),
        _ => unreachable!(),
    };
    let mut c = Circuit::new(
        n_qubits,
        format!("brickwork(n={n_qubits},gates={total_2q},{})", kind.name()),
    );
    let mut placed = 0;
    let mut even_layer = true;
    while placed < total_2q {
        let start = if even_layer { 0 } else { 1 };
        let mut layer_empty = true;
        for a in (start..n_qubits - 1).step_by(2) {
            if placed == total_2q {
                break;
            }
            c.push(make(a));
            placed += 1;
            layer_empty = false;
        }
        even_layer = !even_layer;
        // With n = 2 the odd-aligned layer has no pairs; that is fine as long
        // as the upcoming layer is the even one, which always makes progress.
        if layer_empty && placed < total_2q && !even_layer {
            return Err(Error::InvalidCircuit(
                "brickwork layer placement stalled".into(),
            ));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mat_of(g: &Gate) -> Vec<Complex64> {
        match gate_unitary(g) {
            GateMatrix::One(m) => m.to_vec(),
            GateMatrix::Two(m) => m.to_vec(),
        }
    }

    fn mat_mul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = Complex64::default();
                for k in 0..dim {
                    s += a[i * dim + k] * b[k * dim + j];
                }
                out[i * dim + j] = s;
            }
        }
        out
    }

    fn adjoint(a: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = a[j * dim + i].conj();
            }
        }
        out
    }

    fn assert_identity(m: &[Complex64], dim: usize, tol: f64) {
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 } else { 0.0 };
                let d = m[i * dim + j] - Complex64::new(want, 0.0);
                assert!(
                    d.norm() < tol,
                    "entry ({i},{j}) = {:?} off identity",
                    m[i * dim + j]
                );
            }
        }
    }

    #[test]
    fn known_gate_matrices() {
        let x = mat_of(&Gate::x(0));
        assert_eq!(x[0], Complex64::new(0.0, 0.0));
        assert_eq!(x[1], Complex64::new(1.0, 0.0));

        let cz = mat_of(&Gate::cz(0, 1));
        assert_eq!(cz[15], Complex64::new(-1.0, 0.0));
        assert_eq!(cz[10], Complex64::new(1.0, 0.0));

        // CNOT swaps |10> and |11>.
        let cx = mat_of(&Gate::cnot(0, 1));
        assert_eq!(cx[11], Complex64::new(1.0, 0.0));
        assert_eq!(cx[14], Complex64::new(1.0, 0.0));
        assert_eq!(cx[10], Complex64::new(0.0, 0.0));

        // U3(pi, pi/2, pi/2) is Y up to global phase: check moduli and the
        // relative phase between the two antidiagonal entries.
        use std::f64::consts::PI;
        let y = mat_of(&Gate::u3(0, PI, PI / 2.0, PI / 2.0));
        assert!(y[0].norm() < 1e-15);
        assert!(y[3].norm() < 1e-15);
        assert_abs_diff_eq!(y[1].norm(), 1.0, epsilon = 1e-15);
        let ratio = y[2] / y[1];
        assert_abs_diff_eq!(ratio.re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ratio.im, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn gate_unitaries_are_unitary(
            t in -7.0f64..7.0, p in -7.0f64..7.0, l in -7.0f64..7.0
        ) {
            for g in [
                Gate::x(0),
                Gate::u3(0, t, p, l),
                Gate::phase(0, p),
                Gate::cz(0, 1),
                Gate::cnot(0, 1),
            ] {
                let dim = 1 << g.arity();
                let m = mat_of(&g);
                let prod = mat_mul(&m, &adjoint(&m, dim), dim);
                assert_identity(&prod, dim, 1e-12);
            }
        }

        #[test]
        fn dagger_multiplies_to_identity(
            t in -7.0f64..7.0, p in -7.0f64..7.0, l in -7.0f64..7.0
        ) {
            for g in [Gate::u3(0, t, p, l), Gate::phase(0, p), Gate::x(0)] {
                let dim = 1 << g.arity();
                let prod = mat_mul(&mat_of(&g.dagger()), &mat_of(&g), dim);
                assert_identity(&prod, dim, 1e-12);
            }
        }
    }

    #[test]
    fn circuit_dagger_is_involution() {
        let p = SpinChainParams {
            n_qubits: 4,
            steps: 2,
            theta: [0.3, -0.1, 0.7],
            disorder_seed: 5,
        };
        let c = build_spin_chain_circuit(&p).unwrap();
        assert_eq!(c.dagger().dagger().gates, c.gates);
    }

    #[test]
    fn spin_chain_gate_census() {
        let c = build_spin_chain_circuit(&SpinChainParams {
            n_qubits: 6,
            steps: 1,
            theta: [0.05 * std::f64::consts::PI, 0.0, 0.0],
            disorder_seed: 1,
        })
        .unwrap();
        assert_eq!(c.count_kind(GateKind::X), 3);
        assert_eq!(c.count_kind(GateKind::Cz), 5);
        assert_eq!(c.count_kind(GateKind::U3), 10);
        assert_eq!(c.count_kind(GateKind::Phase), 6);
        assert_eq!(c.two_qubit_depth(), 2);

        let deep = build_spin_chain_circuit(&SpinChainParams {
            n_qubits: 6,
            steps: 35,
            theta: [0.0, 0.0, 0.0],
            disorder_seed: 1,
        })
        .unwrap();
        assert_eq!(deep.two_qubit_depth(), 70);
        assert_eq!(deep.two_qubit_gate_count(), 35 * 5);
    }

    #[test]
    fn spin_chain_rejects_odd_or_tiny_registers() {
        for n in [0, 1, 3, 5, 13] {
            let r = build_spin_chain_circuit(&SpinChainParams {
                n_qubits: n,
                steps: 1,
                theta: [0.0; 3],
                disorder_seed: 0,
            });
            assert!(r.is_err(), "n = {n} should be rejected");
        }
    }

    #[test]
    fn spin_chain_disorder_is_seeded() {
        let build = |seed| {
            build_spin_chain_circuit(&SpinChainParams {
                n_qubits: 4,
                steps: 1,
                theta: [0.1, 0.0, 0.0],
                disorder_seed: seed,
            })
            .unwrap()
        };
        assert_eq!(build(9).gates, build(9).gates);
        assert_ne!(build(9).gates, build(10).gates);
    }

    #[test]
    fn brickwork_layer_structure() {
        // n = 6: even layer holds pairs (0,1),(2,3),(4,5), odd layer (1,2),(3,4).
        let c = build_brickwork_circuit(6, 5, GateKind::Cz).unwrap();
        let pairs: Vec<(usize, usize)> = c.gates.iter().map(|g| (g.qubits[0], g.qubits[1])).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (4, 5), (1, 2), (3, 4)]);

        let c15 = build_brickwork_circuit(6, 15, GateKind::Cz).unwrap();
        assert_eq!(c15.two_qubit_gate_count(), 15);
        assert_eq!(c15.two_qubit_depth(), 6);

        // n = 2 has no odd-aligned pairs: all gates stack on (0,1).
        let c2 = build_brickwork_circuit(2, 30, GateKind::Cnot).unwrap();
        assert_eq!(c2.two_qubit_gate_count(), 30);
        assert!(c2.gates.iter().all(|g| g.qubits[0] == 0 && g.qubits[1] == 1));
        assert_eq!(c2.two_qubit_depth(), 30);

        let c0 = build_brickwork_circuit(4, 0, GateKind::Cz).unwrap();
        assert!(c0.gates.is_empty());
    }

    #[test]
    fn validate_native_reports_first_bad_gate() {
        let mut c = Circuit::new(2, "bad");
        c.push(Gate::cz(0, 1));
        // An X dressed up with two qubits is not a native gate.
        c.push(Gate {
            kind: GateKind::X,
            qubits: ArrayVec::from_iter([0, 1]),
            params: ArrayVec::new(),
            is_twirl_frame: false,
        });
        match validate_native(&c) {
            Err(Error::NonNativeGate { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NonNativeGate, got {other:?}"),
        }

        let mut oob = Circuit::new(2, "oob");
        oob.push(Gate::x(2));
        assert!(validate_native(&oob).is_err());

        let mut dup = Circuit::new(2, "dup");
        dup.push(Gate {
            kind: GateKind::Cz,
            qubits: ArrayVec::from_iter([1, 1]),
            params: ArrayVec::new(),
            is_twirl_frame: false,
        });
        assert!(validate_native(&dup).is_err());

        let wide = Circuit::new(13, "wide");
        assert!(validate_native(&wide).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut c = build_spin_chain_circuit(&SpinChainParams {
            n_qubits: 6,
            steps: 2,
            theta: [0.05 * std::f64::consts::PI, -1.25e-13, 2.0],
            disorder_seed: 77,
        })
        .unwrap();
        c.gates[3].is_twirl_frame = true;
        let text = c.to_text();
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(back, c);
        // Round-trip again to confirm the serialization itself is stable.
        assert_eq!(back.to_text(), text);
    }

    proptest! {
        #[test]
        fn text_round_trip_random_angles(
            angles in proptest::collection::vec(-1e3f64..1e3, 8),
            marks in proptest::collection::vec(any::<bool>(), 8),
        ) {
            let mut c = Circuit::new(3, "prop");
            for (i, (a, m)) in angles.iter().zip(&marks).enumerate() {
                let mut g = match i % 4 {
                    0 => Gate::u3(i % 3, *a, a / 3.0, a * 7.0),
                    1 => Gate::phase(i % 3, *a),
                    2 => Gate::cz(0, 1 + (i % 2)),
                    _ => Gate::x(i % 3),
                };
                g.is_twirl_frame = *m;
                c.push(g);
            }
            let back = Circuit::from_text(&c.to_text()).unwrap();
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn text_parse_errors_name_the_line() {
        let r = Circuit::from_text("qubits 2\nCZ 0 1\nFOO 0\n");
        match r {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Circuit::from_text("CZ 0 1\n").is_err());
        assert!(Circuit::from_text("qubits 2\nU3 0 1.0 2.0\n").is_err());
        assert!(Circuit::from_text("qubits 2\nCZ 0 5\n").is_err());
    }

    #[test]
    fn pauli_string_parsing_and_support() {
        let p: PauliString = "ZIXY".parse().unwrap();
        assert_eq!(p.support(), vec![0, 2, 3]);
        assert_eq!(p.sign(), 1.0);
        assert!(!p.is_z_diagonal());
        assert_eq!(p.to_string(), "ZIXY");

        let m: PauliString = "-ZZ".parse().unwrap();
        assert_eq!(m.sign(), -1.0);
        assert!(m.is_z_diagonal());
        assert_eq!(m.to_string(), "-ZZ");
        assert_eq!(m, m.to_string().parse().unwrap());

        assert!("".parse::<PauliString>().is_err());
        assert!("ZQ".parse::<PauliString>().is_err());

        assert_eq!(PauliString::single_z(4, 2).to_string(), "IIZI");
        assert_eq!(PauliString::z_all(3).to_string(), "ZZZ");
    }
}
