use thiserror::Error;

use crate::cluster::ClusterError;
use crate::evotemplate::GaError;
use crate::harness::HarnessError;
use crate::recommend::RecommendError;
use crate::seqcore::SeqError;
use crate::surrogate::SurrogateError;

/// Any error the library can return. Messages start with the error kind.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}
