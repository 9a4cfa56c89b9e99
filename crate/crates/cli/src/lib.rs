//! Experiment driver: synthetic data, solves, projections, fold comparisons
//! and replays from run manifests.

pub mod args;
pub mod commands;
pub mod experiment;
pub mod manifest;
pub mod output;

use outerproj::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidConfig(_) => EXIT_USAGE,
                Error::NonFinite { .. } | Error::InfeasibleConstraint { .. } | Error::InconsistentHalfSpaces => {
                    EXIT_NUMERICAL
                }
                _ => EXIT_DATA,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_USAGE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_their_exit_class() {
        let cases = [
            (anyhow::Error::from(Error::InvalidConfig("x".into())), EXIT_USAGE),
            (Error::InvalidData("x".into()).into(), EXIT_DATA),
            (Error::NonFinite { what: "risk".into(), iteration: 3 }.into(), EXIT_NUMERICAL),
            (Error::InconsistentHalfSpaces.into(), EXIT_NUMERICAL),
            (anyhow::Error::from(std::io::Error::other("gone")).context("reading"), EXIT_DATA),
        ];
        for (err, code) in cases {
            assert_eq!(exit_code(&err), code, "{err:#}");
        }
    }
}
