//! Ransom escrow protocol simulator.
//!
//! A verifiable-encryption stand-in ([`veck`]) lets the victim check, before
//! paying, that a ciphertext opens to committed data under the key behind a
//! public verification key. The escrow contract ([`contract`]) releases
//! payment only against that key, refunds after a timelock, and supports
//! multi-round schedules the victim can cancel. [`e2e`] drives both with
//! scripted agents and records a replayable JSONL transcript.

pub mod contract;
pub mod e2e;
pub mod error;
pub mod group;
mod par;
pub mod veck;

pub use contract::{
    contract_apply, Action, Actor, Balances, ContractEvent, ContractState, Phase, Refusal, ScheduleEntry,
};
pub use e2e::{
    read_jsonl, replay, run_end_to_end, write_jsonl, AttackerBehavior, E2eConfig, E2eSummary, Mode, Transcript,
    TranscriptEntry,
};
pub use error::{Error, Result};
pub use group::{setup, GroupParams, DEFAULT_CHUNK_BITS};
pub use veck::{
    decrypt, decrypt_bundle, encrypt_with_proof, tamper, verify_cipher_data, verify_key, Rejection, TamperTarget,
    VeckBundle,
};
