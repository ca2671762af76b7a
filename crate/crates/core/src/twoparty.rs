//! Alice/Bob protocol sessions over the counting subroutine.
//!
//! Party-local data is only reachable through role-checked accessors; the
//! counting engine models the quantum channel, and every message it would
//! carry is written to a [`CommLedger`]. One counting run moves
//! `2 (n + 1) (2^t - 1)` qubits: the index register plus the traveling oracle
//! qubit cross from Alice to Bob and back once per Grover call, while Bob's
//! oracle qubit stays home and Alice applies the closing data load and the
//! diffusion locally at no wire cost.

use rand::Rng;

use crate::bits::BitVector;
use crate::counting::{
    self, CountingConfig, CountingOutcome, Engine, OracleKind, OutcomeSampler, PhaseOracle,
};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }
}

/// One party's bit string plus cached local statistics.
pub struct PartyData {
    role: Role,
    bits: BitVector,
}

impl PartyData {
    pub fn new(role: Role, bits: BitVector) -> Self {
        PartyData { role, bits }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Local access, audited: only the owning role may read its own bits.
    pub fn local_bits(&self, accessor: Role) -> Result<&BitVector> {
        if accessor != self.role {
            return Err(Error::Usage(format!(
                "{accessor:?} attempted to read {:?}'s local data",
                self.role
            )));
        }
        Ok(&self.bits)
    }

    /// Mean of the local bit string, computed by the owner.
    pub fn local_mean(&self, accessor: Role) -> Result<f64> {
        let bits = self.local_bits(accessor)?;
        if bits.is_empty() {
            return Err(Error::Usage("empty bit vector has no mean".into()));
        }
        Ok(bits.count_ones() as f64 / bits.len() as f64)
    }

    /// Data as it enters the simulated quantum channel. The channel is the
    /// only cross-party path, and its traffic is what the ledger logs.
    pub(crate) fn channel_bits(&self) -> &BitVector {
        &self.bits
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::AliceToBob => "alice_to_bob",
            Direction::BobToAlice => "bob_to_alice",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub round: u64,
    pub direction: Direction,
    pub qubits: u64,
    pub classical_bits: u64,
}

/// Ledger granularity: one entry pair per Grover call, or one per run for
/// bulk fitting pipelines. Totals are identical either way.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LedgerDetail {
    PerOracleCall,
    Aggregate,
}

/// Ordered record of protocol messages with qubit/classical-bit counts.
#[derive(Clone, Debug, Default)]
pub struct CommLedger {
    entries: Vec<LedgerEntry>,
    next_round: u64,
}

impl CommLedger {
    pub fn new() -> Self {
        CommLedger::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn log(&mut self, direction: Direction, qubits: u64, classical_bits: u64) {
        self.next_round += 1;
        self.entries.push(LedgerEntry {
            round: self.next_round,
            direction,
            qubits,
            classical_bits,
        });
    }

    /// Qubit traffic of `runs` counting executions at widths (n, t).
    pub fn log_counting_runs(&mut self, n: u32, t: u32, runs: u64, detail: LedgerDetail) {
        let per_direction = u64::from(n) + 1;
        let calls = (1u64 << t) - 1;
        match detail {
            LedgerDetail::PerOracleCall => {
                for _ in 0..runs * calls {
                    self.next_round += 1;
                    let round = self.next_round;
                    self.entries.push(LedgerEntry {
                        round,
                        direction: Direction::AliceToBob,
                        qubits: per_direction,
                        classical_bits: 0,
                    });
                    self.entries.push(LedgerEntry {
                        round,
                        direction: Direction::BobToAlice,
                        qubits: per_direction,
                        classical_bits: 0,
                    });
                }
            }
            LedgerDetail::Aggregate => {
                self.log(Direction::AliceToBob, runs * calls * per_direction, 0);
                self.log(Direction::BobToAlice, runs * calls * per_direction, 0);
            }
        }
    }

    pub fn quantum_total(&self) -> u64 {
        self.entries.iter().map(|e| e.qubits).sum()
    }

    pub fn classical_total(&self) -> u64 {
        self.entries.iter().map(|e| e.classical_bits).sum()
    }

    /// Appends another ledger, renumbering its rounds after ours.
    pub fn absorb(&mut self, other: CommLedger) {
        let base = self.next_round;
        for e in other.entries {
            let round = base + e.round;
            self.next_round = self.next_round.max(round);
            self.entries.push(LedgerEntry { round, ..e });
        }
    }

    /// Line-oriented export: `round,direction,qubits,classical_bits`.
    pub fn render_lines(&self) -> String {
        let mut out = String::from("round,direction,qubits,classical_bits\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.round,
                e.direction.as_str(),
                e.qubits,
                e.classical_bits
            ));
        }
        out
    }
}

/// Expected qubit total of one counting run, Eq.-of-the-protocol form.
pub fn counting_qubit_cost(n: u32, t: u32) -> u64 {
    2 * (u64::from(n) + 1) * ((1u64 << t) - 1)
}

/// An estimate plus its claimed standard error, outcomes, and ledger.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub value: f64,
    pub std_claim: f64,
    pub outcomes: Vec<CountingOutcome>,
    pub ledger: CommLedger,
    /// Index register width used by the counting call(s).
    pub index_width: u32,
}

pub(crate) struct ChannelEstimate {
    /// Estimated marked fraction over the 2^n index space.
    pub p_raw: f64,
    /// Claimed std of `p_raw`; zero for the oracle engine.
    pub p_std: f64,
    pub outcome: Option<CountingOutcome>,
    pub index_width: u32,
}

/// One counting execution over the simulated channel, ledger included.
pub(crate) fn channel_counting_run(
    x: &BitVector,
    y: &BitVector,
    kind: OracleKind,
    t: u32,
    engine: Engine,
    rng: &mut impl Rng,
    ledger: &mut CommLedger,
    detail: LedgerDetail,
) -> Result<ChannelEstimate> {
    let n = counting::index_width_for(x.len());
    ledger.log_counting_runs(n, t, 1, detail);
    let outcome = match engine {
        Engine::Exact => Some(counting::run_counting_exact(x, y, kind, t, rng)?),
        Engine::Fast => {
            let p_true = PhaseOracle::new(x, y, kind, n)?.marked_fraction();
            Some(OutcomeSampler::new(p_true, t)?.sample(rng))
        }
        Engine::Oracle => None,
    };
    let (p_raw, p_std) = match &outcome {
        Some(o) => (
            o.p_hat,
            (o.p_hat * (1.0 - o.p_hat)).sqrt() * 2f64.powi(1 - t as i32),
        ),
        None => (PhaseOracle::new(x, y, kind, n)?.marked_fraction(), 0.0),
    };
    Ok(ChannelEstimate {
        p_raw,
        p_std,
        outcome,
        index_width: n,
    })
}

fn validate_parties(alice: &PartyData, bob: &PartyData) -> Result<usize> {
    if alice.role() != Role::Alice || bob.role() != Role::Bob {
        return Err(Error::Usage("expected (Alice, Bob) party pair".into()));
    }
    if alice.len() != bob.len() {
        return Err(Error::Usage(format!(
            "party data lengths differ: {} vs {}",
            alice.len(),
            bob.len()
        )));
    }
    if alice.is_empty() {
        return Err(Error::Usage("party data must be non-empty".into()));
    }
    Ok(alice.len())
}

/// Estimates the product mean `(1/N) sum x_i y_i` over the channel.
///
/// The raw counting fraction lives on the padded `2^n` index space; the
/// returned estimate is rescaled by `2^n / N`, a no-op when `N` is a power
/// of two.
pub fn estimate_product_mean(
    alice: &PartyData,
    bob: &PartyData,
    cfg: &CountingConfig,
) -> Result<EstimateReport> {
    let n_items = validate_parties(alice, bob)?;
    let mut ledger = CommLedger::new();
    let mut rng = rng::stream(cfg.seed, &[0x70726f64]);
    let est = channel_counting_run(
        alice.channel_bits(),
        bob.channel_bits(),
        OracleKind::Correlation,
        cfg.t,
        cfg.engine,
        &mut rng,
        &mut ledger,
        LedgerDetail::PerOracleCall,
    )?;
    let scale = 2f64.powi(est.index_width as i32) / n_items as f64;
    Ok(EstimateReport {
        value: est.p_raw * scale,
        std_claim: est.p_std * scale,
        outcomes: est.outcome.into_iter().collect(),
        ledger,
        index_width: est.index_width,
    })
}

/// Estimates the correlation coefficient of the two bit strings.
///
/// Local means are computed exactly by each party and exchanged as 64-bit
/// classical values; only the product mean crosses the quantum channel.
pub fn estimate_correlation(
    alice: &PartyData,
    bob: &PartyData,
    cfg: &CountingConfig,
) -> Result<EstimateReport> {
    validate_parties(alice, bob)?;
    let x_mean = alice.local_mean(Role::Alice)?;
    let y_mean = bob.local_mean(Role::Bob)?;
    let denom = (x_mean * (1.0 - x_mean) * y_mean * (1.0 - y_mean)).sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateVariance(
            "constant bit string: correlation undefined".into(),
        ));
    }
    let mut product = estimate_product_mean(alice, bob, cfg)?;
    product.ledger.log(Direction::AliceToBob, 0, 64);
    product.ledger.log(Direction::BobToAlice, 0, 64);
    let rho = (product.value - x_mean * y_mean) / denom;
    Ok(EstimateReport {
        value: rho,
        std_claim: product.std_claim / denom,
        outcomes: product.outcomes,
        ledger: product.ledger,
        index_width: product.index_width,
    })
}

/// Estimates the Hamming distance `d` between the two bit strings.
pub fn estimate_hamming(
    alice: &PartyData,
    bob: &PartyData,
    cfg: &CountingConfig,
) -> Result<EstimateReport> {
    validate_parties(alice, bob)?;
    let mut ledger = CommLedger::new();
    let mut rng = rng::stream(cfg.seed, &[0x68616d]);
    let est = channel_counting_run(
        alice.channel_bits(),
        bob.channel_bits(),
        OracleKind::Hamming,
        cfg.t,
        cfg.engine,
        &mut rng,
        &mut ledger,
        LedgerDetail::PerOracleCall,
    )?;
    let scale = 2f64.powi(est.index_width as i32);
    Ok(EstimateReport {
        value: est.p_raw * scale,
        std_claim: est.p_std * scale,
        outcomes: est.outcome.into_iter().collect(),
        ledger,
        index_width: est.index_width,
    })
}
