//! FRPG and LFRPG: schedules, participant state machines, and round drivers.

pub mod run;
pub mod schedule;
pub mod server;
pub mod worker;

pub use run::{run_frpg, run_lfrpg, run_rounds, FrpgRunner, LfrpgRunner, RoundOutcome, RoundRunner};
pub use schedule::{step_alpha, step_beta, Participant, Schedule};
pub use server::{
    frpg_server_begin, frpg_server_end, lfrpg_server_frame_begin, lfrpg_server_frame_end, ServerState,
    UploadCap,
};
pub use worker::{frpg_worker_step, lfrpg_worker_slot, StepContext, WorkerState};
