/// Instrumented operation counters for the per-scan cost budget.
///
/// `point_touches` counts visits to individual scan beams; `correlation_ops`
/// counts arithmetic performed inside the per-element correlation loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub point_touches: u64,
    pub correlation_ops: u64,
}

impl OpCounts {
    pub fn merge(&mut self, other: OpCounts) {
        self.point_touches += other.point_touches;
        self.correlation_ops += other.correlation_ops;
    }
}
