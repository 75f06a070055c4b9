//! Lock-step synchronous runner with a per-edge bit budget.

use std::collections::BTreeMap;

use bitvec::prelude::*;
use rayon::prelude::*;
use serde::Serialize;

use super::CongestError;
use crate::instance::{Graph, NodeId};
use crate::math;

/// A graph plus the number of bits each directed edge may carry per round.
#[derive(Clone, Copy, Debug)]
pub struct CongestNetwork<'g> {
    graph: &'g Graph,
    budget: u32,
}

impl<'g> CongestNetwork<'g> {
    /// Budget `bit_factor · ⌈log2 n⌉`.
    pub fn new(graph: &'g Graph, bit_factor: u32) -> Self {
        let budget = bit_factor.max(1) * math::log_n(u64::from(graph.node_count()));
        CongestNetwork { graph, budget }
    }

    pub fn with_budget(graph: &'g Graph, budget: u32) -> Self {
        CongestNetwork { graph, budget }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }
}

/// One node's behaviour. Each round every node first produces its payloads
/// from its current state, then all payloads are delivered at once.
pub trait NodeProgram: std::marker::Send {
    /// Payloads to neighbors for `round`; at most one per neighbor.
    fn send(&mut self, round: u32, out: &mut Vec<(NodeId, BitVec)>);
    fn receive(&mut self, round: u32, from: NodeId, payload: &BitSlice);
    fn done(&self) -> bool;
}

/// One delivered payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PayloadRecord {
    pub round: u32,
    pub from: NodeId,
    pub to: NodeId,
    pub bits: String,
}

#[derive(Clone, Copy, Debug)]
struct EntryMeta {
    round: u32,
    from: u32,
    to: u32,
    start: u64,
    len: u32,
}

/// Everything sent during a run. Sizes are always tracked; the payloads
/// themselves only when recording is enabled.
#[derive(Clone, Debug, Default)]
pub struct CongestTranscript {
    pub rounds: u32,
    pub budget: u32,
    pub messages: u64,
    pub total_bits: u64,
    pub max_bits: u32,
    /// Payload size in bits → number of payloads.
    pub histogram: BTreeMap<u32, u64>,
    /// Payloads larger than the budget, as `(round, from, to, bits)`.
    pub oversized: Vec<(u32, NodeId, NodeId, u32)>,
    log: Option<(Vec<EntryMeta>, BitVec)>,
}

impl CongestTranscript {
    pub fn new(budget: u32, record: bool) -> Self {
        CongestTranscript { budget, log: record.then(|| (Vec::new(), BitVec::new())), ..Default::default() }
    }

    pub fn is_recording(&self) -> bool {
        self.log.is_some()
    }

    /// Adds one payload to the record.
    pub fn push(&mut self, round: u32, from: NodeId, to: NodeId, payload: &BitSlice) {
        let len = payload.len() as u32;
        self.messages += 1;
        self.total_bits += u64::from(len);
        self.max_bits = self.max_bits.max(len);
        *self.histogram.entry(len).or_default() += 1;
        if len > self.budget {
            self.oversized.push((round, from, to, len));
        }
        if let Some((meta, arena)) = &mut self.log {
            meta.push(EntryMeta { round, from: from.0, to: to.0, start: arena.len() as u64, len });
            arena.extend_from_bitslice(payload);
        }
    }

    /// Recorded payloads in send order, or `None` when not recording.
    pub fn payloads(&self) -> Option<impl Iterator<Item = (u32, NodeId, NodeId, &BitSlice)>> {
        self.log.as_ref().map(|(meta, arena)| {
            meta.iter().map(move |m| {
                let start = m.start as usize;
                (m.round, NodeId(m.from), NodeId(m.to), &arena[start..start + m.len as usize])
            })
        })
    }

    /// Recorded payloads as `0`/`1` strings.
    pub fn records(&self) -> Vec<PayloadRecord> {
        self.payloads()
            .map(|it| {
                it.map(|(round, from, to, bits)| PayloadRecord {
                    round,
                    from,
                    to,
                    bits: bits.iter().map(|b| if *b { '1' } else { '0' }).collect(),
                })
                .collect()
            })
            .unwrap_or_default()
    }
}

/// Result of [`message_size_audit`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub pass: bool,
    pub budget: u32,
    pub max_bits: u32,
    pub histogram: BTreeMap<u32, u64>,
    /// `(round, from, to, bits)` of every payload over budget.
    pub offenders: Vec<(u32, NodeId, NodeId, u32)>,
}

/// Checks every payload against the transcript's budget.
pub fn message_size_audit(transcript: &CongestTranscript) -> AuditReport {
    let offenders = transcript.oversized.clone();
    AuditReport {
        pass: offenders.is_empty(),
        budget: transcript.budget,
        max_bits: transcript.max_bits,
        histogram: transcript.histogram.clone(),
        offenders,
    }
}

/// Steps a set of node programs one round at a time.
pub struct CongestRunner<'g, P> {
    network: CongestNetwork<'g>,
    programs: Vec<P>,
    transcript: CongestTranscript,
    outboxes: Vec<Vec<(NodeId, BitVec)>>,
}

impl<'g, P: NodeProgram> CongestRunner<'g, P> {
    pub fn new(network: CongestNetwork<'g>, programs: Vec<P>, record: bool) -> Self {
        let transcript = CongestTranscript::new(network.budget(), record);
        Self::with_transcript(network, programs, transcript)
    }

    /// Continues an existing transcript (for multi-phase algorithms).
    pub fn with_transcript(network: CongestNetwork<'g>, programs: Vec<P>, transcript: CongestTranscript) -> Self {
        assert_eq!(programs.len(), network.graph().node_count() as usize, "one program per node");
        let outboxes = programs.iter().map(|_| Vec::new()).collect();
        CongestRunner { network, programs, transcript, outboxes }
    }

    pub fn network(&self) -> CongestNetwork<'g> {
        self.network
    }

    pub fn programs(&self) -> &[P] {
        &self.programs
    }

    pub fn programs_mut(&mut self) -> &mut [P] {
        &mut self.programs
    }

    pub fn transcript(&self) -> &CongestTranscript {
        &self.transcript
    }

    /// Rounds executed so far, over all phases sharing the transcript.
    pub fn round(&self) -> u32 {
        self.transcript.rounds
    }

    pub fn all_done(&self) -> bool {
        self.programs.iter().all(|p| p.done())
    }

    pub fn into_parts(self) -> (Vec<P>, CongestTranscript) {
        (self.programs, self.transcript)
    }

    /// Runs one round. Returns the number of payloads delivered.
    pub fn step(&mut self) -> Result<usize, CongestError> {
        let round = self.transcript.rounds + 1;
        self.programs.par_iter_mut().zip(self.outboxes.par_iter_mut()).for_each(|(p, out)| {
            out.clear();
            p.send(round, out);
        });
        let graph = self.network.graph();
        let budget = self.network.budget();
        let mut delivered = 0;
        for (from, out) in self.outboxes.iter_mut().enumerate() {
            let from = NodeId(from as u32);
            out.sort_by_key(|(to, _)| *to);
            if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(CongestError::DuplicatePayload { round, from, to: w[0].0 });
            }
            for (to, payload) in out.iter() {
                if graph.edge_id(from, *to).is_none() {
                    return Err(CongestError::NotNeighbor { round, from, to: *to });
                }
                if payload.len() > budget as usize {
                    return Err(CongestError::Budget { round, from, to: *to, bits: payload.len() as u32, budget });
                }
                self.transcript.push(round, from, *to, payload);
                self.programs[to.index()].receive(round, from, payload);
                delivered += 1;
            }
        }
        self.transcript.rounds = round;
        Ok(delivered)
    }
}

/// Runs until every program is done. Fails if that takes more than
/// `max_rounds` rounds.
pub fn run_congest<P: NodeProgram>(
    network: CongestNetwork<'_>,
    programs: Vec<P>,
    max_rounds: u32,
    record: bool,
) -> Result<(CongestTranscript, Vec<P>), CongestError> {
    let mut runner = CongestRunner::new(network, programs, record);
    while !runner.all_done() {
        if runner.round() >= max_rounds {
            return Err(CongestError::NoTermination { max_rounds });
        }
        runner.step()?;
    }
    let (programs, transcript) = runner.into_parts();
    Ok((transcript, programs))
}
