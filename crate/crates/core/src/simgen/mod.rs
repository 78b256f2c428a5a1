//! Data generators for the two simulation designs: a rank-structured
//! Fourier-basis model with heteroscedastic groups (`sim1`) and a
//! Brownian-motion model observed with measurement error or sparsely
//! (`sim2`).

mod errors;
mod sim1;
mod sim2;

pub use errors::{error_draw, ErrorDist};
pub use sim1::{
    fourier_basis, sim1_covariance_surface, sim1_generate, sim1_mean, Sim1Config, SIM1_N1, SIM1_N2, SIM1_N3,
};
pub use sim2::{mixing_matrix, sim2_generate, Sim2Config, Sim2Scenario, SIM2_N1, SIM2_N2, SIM2_N3};

/// Named size vector (`n1`, `n2`, `n3`) for a design.
pub fn named_sizes(design: &str, label: &str) -> Option<Vec<usize>> {
    let table: [&[usize]; 3] = match design {
        "sim1" => [&SIM1_N1, &SIM1_N2, &SIM1_N3],
        "sim2" => [&SIM2_N1, &SIM2_N2, &SIM2_N3],
        _ => return None,
    };
    match label {
        "n1" => Some(table[0].to_vec()),
        "n2" => Some(table[1].to_vec()),
        "n3" => Some(table[2].to_vec()),
        _ => None,
    }
}
