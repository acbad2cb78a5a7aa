//! XOR-only networks that multiply a field element by a constant.
//!
//! Multiplication by a fixed constant `c` in GF(2^m) is a GF(2)-linear map,
//! so it is fully described by an m-by-m bit matrix and realizable with
//! nothing but 2-input XOR gates. [`mul_by_const_matrix`] builds the matrix;
//! [`synthesize_multiplier`] turns it into a gate network, exactly minimal
//! for `m <= 4` (breadth-first search over reachable sets of linear forms)
//! and greedy common-subexpression elimination above that.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::galois::{FieldSpec, GfElement};

/// A named wire in a network: either input bit `x<i>` or gate output `t<i>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Input(usize),
    Gate(usize),
}

impl std::fmt::Display for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signal::Input(i) => write!(f, "x{i}"),
            Signal::Gate(i) => write!(f, "t{i}"),
        }
    }
}

/// One 2-input XOR gate. Operands may reference inputs or earlier gates only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XorGate {
    pub a: Signal,
    pub b: Signal,
}

/// An acyclic network of 2-input XOR gates with `m` inputs and `m` outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorNetwork {
    inputs: usize,
    gates: Vec<XorGate>,
    outputs: Vec<Signal>,
}

impl XorNetwork {
    /// Assembles a network, enforcing that every gate operand references an
    /// input or a strictly earlier gate and that outputs are well-formed.
    pub fn new(inputs: usize, gates: Vec<XorGate>, outputs: Vec<Signal>) -> Self {
        let check = |sig: Signal, limit: usize| match sig {
            Signal::Input(i) => assert!(i < inputs, "input x{i} out of range"),
            Signal::Gate(g) => assert!(g < limit, "gate t{g} referenced before definition"),
        };
        for (idx, gate) in gates.iter().enumerate() {
            check(gate.a, idx);
            check(gate.b, idx);
        }
        for &out in &outputs {
            check(out, gates.len());
        }
        Self {
            inputs,
            gates,
            outputs,
        }
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[XorGate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Signal] {
        &self.outputs
    }

    /// Evaluates the network on an input word, gates in definition order.
    pub fn eval(&self, x: GfElement) -> GfElement {
        let mut values = Vec::with_capacity(self.gates.len());
        let read = |sig: Signal, values: &[u16]| -> u16 {
            match sig {
                Signal::Input(i) => (x >> i) & 1,
                Signal::Gate(g) => values[g],
            }
        };
        for gate in &self.gates {
            let v = read(gate.a, &values) ^ read(gate.b, &values);
            values.push(v);
        }
        let mut out = 0u16;
        for (j, &sig) in self.outputs.iter().enumerate() {
            out |= read(sig, &values) << j;
        }
        out
    }

    /// Netlist text: one `t<i> = <sig> ^ <sig>` line per gate, then one
    /// `y<j> = <sig>` binding per output. No constants appear; a constant
    /// zero output is expressed as `x0 ^ x0`.
    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        for (i, gate) in self.gates.iter().enumerate() {
            writeln!(s, "t{i} = {} ^ {}", gate.a, gate.b).unwrap();
        }
        for (j, out) in self.outputs.iter().enumerate() {
            writeln!(s, "y{j} = {out}").unwrap();
        }
        s
    }
}

/// The m-by-m GF(2) matrix of multiplication by `c`: column `j` holds
/// `c * z^j`, so row `i`, bit `j` is set when `c * z^j` has bit `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstMatrix {
    m: usize,
    rows: Vec<u16>,
}

impl ConstMatrix {
    pub fn width(&self) -> usize {
        self.m
    }

    /// Row `i` as a bitmask over input bits.
    pub fn row(&self, i: usize) -> u16 {
        self.rows[i]
    }

    pub fn rows(&self) -> &[u16] {
        &self.rows
    }

    /// Column `j` as a bitmask over output bits (equals `c * z^j`).
    pub fn column(&self, j: usize) -> u16 {
        let mut col = 0u16;
        for i in 0..self.m {
            col |= ((self.rows[i] >> j) & 1) << i;
        }
        col
    }

    /// Matrix-vector product over GF(2).
    pub fn apply(&self, x: GfElement) -> GfElement {
        let mut out = 0u16;
        for (i, &row) in self.rows.iter().enumerate() {
            out |= (((row & x).count_ones() & 1) as u16) << i;
        }
        out
    }
}

pub fn mul_by_const_matrix(spec: &FieldSpec, c: GfElement) -> ConstMatrix {
    let m = spec.width() as usize;
    let mut rows = vec![0u16; m];
    for j in 0..m {
        let col = spec.mul(c, 1 << j);
        for (i, row) in rows.iter_mut().enumerate() {
            *row |= ((col >> i) & 1) << j;
        }
    }
    ConstMatrix { m, rows }
}

/// Gate count of the direct row-by-row realization: `popcount - 1` XORs per
/// row, plus one shared `x0 ^ x0` gate when a row is all-zero (only the
/// zero constant produces such rows; its matrix is entirely zero).
pub fn naive_gate_count(matrix: &ConstMatrix) -> usize {
    let mut gates = 0usize;
    let mut any_zero_row = false;
    for &row in matrix.rows() {
        let pc = row.count_ones() as usize;
        if pc == 0 {
            any_zero_row = true;
        } else {
            gates += pc - 1;
        }
    }
    gates + usize::from(any_zero_row)
}

/// Builds an XOR network computing `x -> c * x`.
///
/// For `m <= 4` the result uses the provably minimal number of gates; above
/// that, greedy pairwise common-subexpression elimination, which never
/// exceeds the naive row-by-row count.
pub fn synthesize_multiplier(spec: &FieldSpec, c: GfElement) -> XorNetwork {
    let matrix = mul_by_const_matrix(spec, c);
    synthesize_from_matrix(&matrix)
}

/// Synthesis entry point on an explicit matrix (any GF(2)-linear map).
pub fn synthesize_from_matrix(matrix: &ConstMatrix) -> XorNetwork {
    let m = matrix.width();
    if m <= 4 {
        synthesize_exact(matrix)
    } else {
        synthesize_greedy(matrix)
    }
}

/// Exact minimal synthesis for small widths.
///
/// States are sets of nonzero linear forms over the inputs, encoded as a
/// bitmask indexed by `form - 1`; a gate XORs two available forms and adds a
/// new one. Breadth-first search from the singleton forms finds the fewest
/// gates whose closure covers every nonzero target row. For m = 4 there are
/// at most 2^15 forms sets, so the walk is immediate.
fn synthesize_exact(matrix: &ConstMatrix) -> XorNetwork {
    let m = matrix.width();
    debug_assert!(m <= 4);
    let targets: BTreeSet<u16> = matrix.rows().iter().copied().filter(|&r| r != 0).collect();

    let form_bit = |form: u16| -> u32 { 1u32 << (form - 1) };
    let mut initial: u32 = 0;
    for j in 0..m {
        initial |= form_bit(1 << j);
    }
    let goal_mask: u32 = targets.iter().map(|&t| form_bit(t)).fold(0, |a, b| a | b);

    // parent[state] = (previous state, form added, operand forms)
    let mut parent: HashMap<u32, (u32, u16, u16, u16)> = HashMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(initial);
    parent.insert(initial, (initial, 0, 0, 0));
    let mut final_state = None;
    if initial & goal_mask == goal_mask {
        final_state = Some(initial);
    }
    'bfs: while let Some(state) = queue.pop_front() {
        if final_state.is_some() {
            break;
        }
        let forms: Vec<u16> = (1..(1u16 << m))
            .filter(|&f| state & form_bit(f) != 0)
            .collect();
        for (ia, &fa) in forms.iter().enumerate() {
            for &fb in &forms[ia + 1..] {
                let new_form = fa ^ fb;
                debug_assert!(new_form != 0);
                if state & form_bit(new_form) != 0 {
                    continue;
                }
                let next = state | form_bit(new_form);
                if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(next) {
                    slot.insert((state, new_form, fa, fb));
                    if next & goal_mask == goal_mask {
                        final_state = Some(next);
                        break 'bfs;
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    let final_state = final_state.expect("target forms are reachable from singletons");

    // Rebuild the gate chain from the parent links, oldest gate first.
    let mut added: Vec<(u16, u16, u16)> = Vec::new();
    let mut cursor = final_state;
    while cursor != initial {
        let (prev, form, fa, fb) = parent[&cursor];
        added.push((form, fa, fb));
        cursor = prev;
    }
    added.reverse();

    let mut signal_of: HashMap<u16, Signal> =
        (0..m).map(|j| (1u16 << j, Signal::Input(j))).collect();
    let mut gates = Vec::new();
    for (form, fa, fb) in added {
        let gate = XorGate {
            a: signal_of[&fa],
            b: signal_of[&fb],
        };
        signal_of.insert(form, Signal::Gate(gates.len()));
        gates.push(gate);
    }
    bind_outputs(matrix, gates, &signal_of)
}

/// Greedy common-subexpression elimination (pairwise factoring).
///
/// Repeatedly materializes the pair of signals shared by the most rows, then
/// emits the leftover per-row XOR chains. Each factoring step replaces f >= 2
/// occurrences of a pair with one gate plus f single references, so the total
/// never exceeds the naive count.
fn synthesize_greedy(matrix: &ConstMatrix) -> XorNetwork {
    let m = matrix.width();
    // Rows as sets of signal ids; ids 0..m are inputs, m.. are gates.
    let mut rows: Vec<BTreeSet<usize>> = matrix
        .rows()
        .iter()
        .map(|&row| (0..m).filter(|j| (row >> j) & 1 != 0).collect())
        .collect();
    let mut gates: Vec<XorGate> = Vec::new();
    let id_signal = |id: usize| {
        if id < m {
            Signal::Input(id)
        } else {
            Signal::Gate(id - m)
        }
    };

    loop {
        let mut best: Option<(usize, usize, usize)> = None; // (count, a, b)
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for row in &rows {
            let ids: Vec<usize> = row.iter().copied().collect();
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    *counts.entry((a, b)).or_default() += 1;
                }
            }
        }
        for (&(a, b), &count) in &counts {
            let better = match best {
                None => count >= 2,
                Some((bc, ba, bb)) => count > bc || (count == bc && (a, b) < (ba, bb)),
            };
            if count >= 2 && better {
                best = Some((count, a, b));
            }
        }
        let Some((_, a, b)) = best else { break };
        let new_id = m + gates.len();
        gates.push(XorGate {
            a: id_signal(a),
            b: id_signal(b),
        });
        for row in &mut rows {
            if row.contains(&a) && row.contains(&b) {
                row.remove(&a);
                row.remove(&b);
                row.insert(new_id);
            }
        }
    }

    // Emit the leftover chains, reusing an identical already-chained row.
    let mut chained: BTreeMap<Vec<usize>, Signal> = BTreeMap::new();
    let mut row_signals: Vec<Option<Signal>> = Vec::with_capacity(rows.len());
    for row in &rows {
        let ids: Vec<usize> = row.iter().copied().collect();
        if ids.is_empty() {
            row_signals.push(None);
            continue;
        }
        if let Some(&sig) = chained.get(&ids) {
            row_signals.push(Some(sig));
            continue;
        }
        let mut acc = id_signal(ids[0]);
        for &id in &ids[1..] {
            gates.push(XorGate {
                a: acc,
                b: id_signal(id),
            });
            acc = Signal::Gate(gates.len() - 1);
        }
        chained.insert(ids, acc);
        row_signals.push(Some(acc));
    }

    let mut zero_signal: Option<Signal> = None;
    let mut outputs = Vec::with_capacity(m);
    for sig in row_signals {
        match sig {
            Some(s) => outputs.push(s),
            None => {
                let z = *zero_signal.get_or_insert_with(|| {
                    gates.push(XorGate {
                        a: Signal::Input(0),
                        b: Signal::Input(0),
                    });
                    Signal::Gate(gates.len() - 1)
                });
                outputs.push(z);
            }
        }
    }
    XorNetwork::new(m, gates, outputs)
}

/// Output-binding step for the exact path: map each row's form to its
/// signal, inserting one shared `x0 ^ x0` gate for all-zero rows.
fn bind_outputs(
    matrix: &ConstMatrix,
    mut gates: Vec<XorGate>,
    signal_of: &HashMap<u16, Signal>,
) -> XorNetwork {
    let m = matrix.width();
    let mut zero_signal: Option<Signal> = None;
    let mut outputs = Vec::with_capacity(m);
    for i in 0..m {
        let row = matrix.row(i);
        if row == 0 {
            let z = *zero_signal.get_or_insert_with(|| {
                gates.push(XorGate {
                    a: Signal::Input(0),
                    b: Signal::Input(0),
                });
                Signal::Gate(gates.len() - 1)
            });
            outputs.push(z);
        } else {
            outputs.push(signal_of[&row]);
        }
    }
    XorNetwork::new(m, gates, outputs)
}
