mod common;

use common::{in_pool, pipeline_outputs};

#[test]
fn identical_across_runs_and_thread_counts() {
    let one = in_pool(1, || pipeline_outputs(3, 2));
    assert_eq!(one, in_pool(1, || pipeline_outputs(3, 2)));
    assert_eq!(one, in_pool(3, || pipeline_outputs(3, 2)));
    assert_eq!(one, in_pool(8, || pipeline_outputs(3, 2)));
}
