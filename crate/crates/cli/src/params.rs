//! Per-subcommand parameters. Each struct doubles as a clap argument group and as
//! the `params` object of a JSON run config, so flags and config keys coincide.

use clap::Parser;
use serde::{Deserialize, Serialize};

macro_rules! params {
    ($(#[$meta:meta])* $name:ident { $($body:tt)* }) => {
        $(#[$meta])*
        #[derive(Parser, Debug, Clone, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name { $($body)* }

        impl Default for $name {
            fn default() -> Self {
                Self::parse_from([stringify!($name)])
            }
        }
    };
}

params!(
    /// Exact isoperimetric profile on a window.
    ProfileParams {
        /// z1, z2, z3, heisenberg or lamplighter.
        #[arg(long, default_value = "z2")]
        pub family: String,
        #[arg(long, default_value_t = 10)]
        pub rmax: usize,
        /// vertex or edge.
        #[arg(long, default_value = "vertex")]
        pub normalization: String,
        /// Lamp alphabet size minus one.
        #[arg(long, default_value_t = 1)]
        pub q: u32,
    }
);

params!(
    /// Wulff samplers along dilations, or their fiber lift.
    WulffParams {
        #[arg(long, default_value_t = 2)]
        pub d: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        pub rho: Vec<f64>,
        /// Lift to `Z^d × Z_m` when set.
        #[arg(long)]
        pub fiber_m: Option<u32>,
        #[arg(long, default_value_t = 2_000_000)]
        pub max_points: usize,
    }
);

params!(
    /// Energy convergence of grid samplers of a disk or square.
    GammaParams {
        /// disk or square.
        #[arg(long, default_value = "disk")]
        pub shape: String,
        /// axis or stencil3.
        #[arg(long, default_value = "axis")]
        pub anisotropy: String,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        pub k: Vec<u32>,
    }
);

params!(
    /// Curl fitting on random rational 1-cochains.
    CurlfitParams {
        #[arg(long, value_delimiter = ',', default_value = "4,4")]
        pub n: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        pub samples: usize,
        #[arg(long, default_value_t = 9)]
        pub max_abs: i64,
    }
);

params!(
    /// Heisenberg stacks: per-edge decomposition against the lifted count.
    HeisParams {
        #[arg(long, default_value_t = 100)]
        pub random_stacks: usize,
        #[arg(long, default_value_t = 8)]
        pub side: i64,
        #[arg(long, default_value_t = 12)]
        pub max_height: u64,
    }
);

params!(
    /// Step-2 stacks: two-sided bounds against the lifted count.
    Step2Params {
        /// `omega[i][j]` for `i < j`, as JSON; default is the rank-two cocycle on `Z^3`.
        #[arg(long)]
        pub omega: Option<String>,
        #[arg(long, default_value_t = 50)]
        pub random_stacks: usize,
        #[arg(long, default_value_t = 4)]
        pub side: i64,
        #[arg(long, default_value_t = 4)]
        pub max_height: u64,
    }
);

params!(
    /// Interleaved chain on nested squares in `Z^2`.
    TfParams {
        #[arg(long, default_value_t = 8)]
        pub rmax: usize,
        #[arg(long, default_value_t = 1.0)]
        pub theta: f64,
    }
);

params!(
    /// Lamplighter checkpoints and the split formula.
    LamplighterParams {
        #[arg(long, default_value_t = 1)]
        pub q: u32,
        #[arg(long, default_value_t = 4)]
        pub kmin: u64,
        #[arg(long, default_value_t = 64)]
        pub kmax: u64,
        /// Brute-force the split formula for `|U| ≤ brute`.
        #[arg(long, default_value_t = 5)]
        pub brute: usize,
    }
);

params!(
    /// Layer-nested sets in `Z^d ⋊_A Z` with log heights.
    SemidirectParams {
        /// Row-major matrix as JSON.
        #[arg(long, default_value = "[[2,1],[1,1]]")]
        pub a: String,
        /// cube, ball or diamond.
        #[arg(long, default_value = "cube")]
        pub body: String,
        #[arg(long, default_value_t = 0.9)]
        pub alpha: f64,
        #[arg(long, default_value_t = 4)]
        pub rmin: u32,
        #[arg(long, default_value_t = 16)]
        pub rmax: u32,
    }
);

params!(
    /// Balloon chain profile interval.
    BalloonParams {
        #[arg(long, value_delimiter = ',', default_value = "4,12,36,108")]
        pub sizes: Vec<usize>,
    }
);

params!(
    /// Dirichlet Cheeger check on connected sets and Faber–Krahn on cubes.
    SpectralParams {
        #[arg(long, default_value_t = 2)]
        pub d: usize,
        #[arg(long, default_value_t = 6)]
        pub max_size: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,40")]
        pub sides: Vec<usize>,
    }
);

params!(
    /// Mixing times on `(Z_m)^d`.
    MixingParams {
        #[arg(long, default_value_t = 3)]
        pub d: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,12,16,24")]
        pub m: Vec<usize>,
        #[arg(long, default_value_t = 0.25)]
        pub eps: f64,
        /// tv or linf.
        #[arg(long, default_value = "tv")]
        pub distance: String,
    }
);

params!(
    /// Compression of the dyadic interval embedding of `Z`.
    EmbedParams {
        #[arg(long, default_value_t = 9)]
        pub levels: u32,
        #[arg(long, default_value_t = 10_000)]
        pub tmax: usize,
        #[arg(long, default_value_t = 40)]
        pub points: usize,
    }
);

params!(
    /// Tempered constants of dyadic cubes.
    TemperedParams {
        #[arg(long, default_value_t = 2)]
        pub d: usize,
        #[arg(long, default_value_t = 5)]
        pub kmax: usize,
    }
);
