use super::PsumSrc;

/// The node a CU picked for this cycle, relative to its feedback register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    /// The node whose partial sum already sits in the feedback register.
    Same,
    /// A node with a partial sum cached in the psum file.
    Cached,
    /// A node that has never executed. `first_new` marks the earliest such node in the task list.
    New { first_new: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsumTransition {
    pub src: PsumSrc,
    /// Write the feedback register (previous, unsolved node) into the psum file.
    pub write_prev: bool,
    /// Read the current node's partial sum from the psum file and free its slot.
    pub read_cur: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsumOutcome {
    Proceed(PsumTransition),
    /// Not enough free psum slots to park the previous node: the CU stalls.
    Blocked,
}

/// psum-file access for a CU that executes `cur` this cycle.
///
/// `prev_unsolved` is whether the feedback register holds a partial sum of an
/// unfinished node. Parking it for a new node needs two free slots, or one if
/// the new node is the first new node of the task list; otherwise the CU blocks.
///
/// Starting any other new node always leaves one slot free, so the first new
/// node can be parked later. Without that reserve a CU can fill its file with
/// skipped-ahead nodes and never start the node everything else waits on.
pub fn apply_psum_rules(prev_unsolved: bool, cur: Candidate, free_slots: usize) -> PsumOutcome {
    use PsumOutcome::*;
    let t = |src, write_prev, read_cur| Proceed(PsumTransition { src, write_prev, read_cur });
    match (prev_unsolved, cur) {
        (_, Candidate::Same) => t(PsumSrc::Feedback, false, false),
        (false, Candidate::New { first_new: true }) => t(PsumSrc::Zero, false, false),
        (false, Candidate::New { first_new: false }) => {
            if free_slots >= 1 {
                t(PsumSrc::Zero, false, false)
            } else {
                Blocked
            }
        }
        (false, Candidate::Cached) => t(PsumSrc::File, false, true),
        (true, Candidate::New { first_new }) => {
            let need = if first_new { 1 } else { 2 };
            if free_slots >= need {
                t(PsumSrc::Zero, true, false)
            } else {
                Blocked
            }
        }
        // Read-before-write: the slot freed by the read takes the write.
        (true, Candidate::Cached) => t(PsumSrc::File, true, true),
    }
}
