//! Synthetic regulatory-network data, dataset files, splits and metrics.

mod io;
mod metrics;
mod network;
mod rng;

pub use io::{
    load_csv, load_graph, load_matrix_csv, load_vector_csv, random_splits, write_graph,
    write_matrix_csv, write_vector_csv, CsvOptions, Dataset, Split, TargetKind,
};
pub use metrics::{auc, mse};
pub use network::{
    generate_network, generate_response, signed_graph_for_example, star_graph, true_regressor,
    Example, NetworkParams, EXAMPLE_GENES_PER_REGULATOR,
};
pub use rng::SampleRng;
