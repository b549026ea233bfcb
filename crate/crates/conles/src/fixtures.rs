//! Small built-in models used by tests, the benchmark harness, and the
//! bundled PNML files under `fixtures/`.

use crate::petri::{LabeledPetriNet, NetBuilder};

/// The running-example model: a loop over `A B C` with a rework transition
/// `D`, a silent shortcut back into the loop, and an exit `E`.
///
/// Places `p0..p4`; transitions `A: p0->p1`, `B: p1->p2`, `C: p2->p3`,
/// `D: p3->p0`, `tau: p3->p2` (silent), `E: p3->p4`; initial `[p0]`,
/// final `[p4]`.
pub fn example_model() -> LabeledPetriNet {
    NetBuilder::new()
        .places(["p0", "p1", "p2", "p3", "p4"])
        .activity("A")
        .activity("B")
        .activity("C")
        .activity("D")
        .silent("tau")
        .activity("E")
        .arc("p0", "A")
        .arc("A", "p1")
        .arc("p1", "B")
        .arc("B", "p2")
        .arc("p2", "C")
        .arc("C", "p3")
        .arc("p3", "D")
        .arc("D", "p0")
        .arc("p3", "tau")
        .arc("tau", "p2")
        .arc("p3", "E")
        .arc("E", "p4")
        .initial_marking([("p0", 1)])
        .final_marking([("p4", 1)])
        .build()
        .expect("example model is valid")
}

/// A synthetic stress model: `branches` concurrent branches, each a small
/// cycle with an exit, between a fork and a join. The reachable marking count
/// grows as `4^branches`, which makes full-trace search state spaces explode
/// on long traces while every window stays cheap.
///
/// Branch `i` contributes places `b{i}q0..b{i}q2`, `b{i}x` and transitions
/// `w{i}a: q0->q1`, `w{i}b: q1->q2`, `w{i}r: q2->q0` (rework loop), and
/// `w{i}e: q2->x` (exit). `fork` starts all branches, `join` collects them.
pub fn parallel_loops_model(branches: usize) -> LabeledPetriNet {
    assert!(branches >= 1);
    let mut b = NetBuilder::new().place("start").place("done");
    b = b.transition("fork", crate::petri::Label::Silent);
    b = b.transition("join", crate::petri::Label::Silent);
    b = b.arc("start", "fork");
    b = b.arc("join", "done");
    for i in 0..branches {
        let q0 = format!("b{i}q0");
        let q1 = format!("b{i}q1");
        let q2 = format!("b{i}q2");
        let x = format!("b{i}x");
        let a = format!("w{i}a");
        let w = format!("w{i}b");
        let r = format!("w{i}r");
        let e = format!("w{i}e");
        b = b
            .places([q0.clone(), q1.clone(), q2.clone(), x.clone()])
            .activity(a.clone())
            .activity(w.clone())
            .activity(r.clone())
            .activity(e.clone())
            .arc("fork", q0.clone())
            .arc(q0.clone(), a.clone())
            .arc(a, q1.clone())
            .arc(q1, w.clone())
            .arc(w, q2.clone())
            .arc(q2.clone(), r.clone())
            .arc(r, q0)
            .arc(q2, e.clone())
            .arc(e, x.clone())
            .arc(x, "join");
    }
    b.initial_marking([("start", 1)])
        .final_marking([("done", 1)])
        .build()
        .expect("parallel loops model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_loops_shape() {
        let net = parallel_loops_model(4);
        assert_eq!(net.num_transitions(), 4 * 4 + 2);
        assert_eq!(net.num_places(), 4 * 4 + 2);
    }
}
