use crate::collision::{Conflict, ConflictKind};
use crate::lowlevel::{Constraint, Location, Polarity};

/// Location and time that resolve `conflict` for its first (lower id) agent.
///
/// Vertex conflicts constrain the shared vertex at the shared instant.
/// Swaps and geometric conflicts constrain the first agent's motion during
/// the step; for a parked or waiting agent that is a wait motion.
pub fn conflict_location(conflict: &Conflict) -> (Location, usize) {
    match conflict.kind {
        ConflictKind::Vertex { vertex, time } => (Location::Vertex(vertex), time),
        ConflictKind::EdgeSwap | ConflictKind::Geometric { .. } => (
            Location::Motion {
                from: conflict.first.from,
                to: conflict.first.to,
            },
            conflict.step,
        ),
    }
}

/// Disjoint split: `(positive, negative)` constraints on the conflict's
/// first agent. Every plan satisfies exactly one of the two.
pub fn disjoint_split(conflict: &Conflict) -> (Constraint, Constraint) {
    let (location, time) = conflict_location(conflict);
    let agent = conflict.first.agent;
    let make = |polarity| Constraint {
        agent,
        location,
        time,
        polarity,
    };
    (make(Polarity::Positive), make(Polarity::Negative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::MotionSegment;

    fn seg(agent: usize, from: usize, to: usize, step: usize) -> MotionSegment {
        MotionSegment {
            agent,
            from,
            to,
            step,
        }
    }

    #[test]
    fn vertex_conflict_splits_on_vertex() {
        let c = Conflict {
            first: seg(0, 1, 3, 2),
            second: seg(1, 2, 3, 2),
            step: 2,
            kind: ConflictKind::Vertex { vertex: 3, time: 3 },
        };
        let (pos, neg) = disjoint_split(&c);
        assert_eq!(pos, Constraint::vertex(0, 3, 3, Polarity::Positive));
        assert_eq!(neg, Constraint::vertex(0, 3, 3, Polarity::Negative));
    }

    #[test]
    fn geometric_conflict_splits_on_motion() {
        let c = Conflict {
            first: seg(1, 4, 4, 5),
            second: seg(2, 0, 7, 5),
            step: 5,
            kind: ConflictKind::Geometric {
                tau: 0.3,
                min_dist: 0.01,
            },
        };
        let (pos, neg) = disjoint_split(&c);
        assert_eq!(pos, Constraint::motion(1, 4, 4, 5, Polarity::Positive));
        assert_eq!(neg, Constraint::motion(1, 4, 4, 5, Polarity::Negative));
    }
}
