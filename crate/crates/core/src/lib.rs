//! Wildfire-aware evacuation planning on time-expanded road networks.

pub mod fire;
pub mod geometry;
pub mod io;
pub mod maxflow;
pub mod planner;
pub mod roadnet;
pub mod ten;
pub mod wten;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Plan(#[from] planner::PlanError),
    #[error(transparent)]
    Roadnet(#[from] roadnet::RoadnetError),
    #[error(transparent)]
    Fire(#[from] fire::FireError),
    #[error(transparent)]
    File(#[from] io::FileError),
    #[error(transparent)]
    Export(#[from] io::geojson::ExportError),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Plan(e) => e.is_infeasible(),
            Error::Roadnet(roadnet::RoadnetError::InfeasibleSource(_)) => true,
            _ => false,
        }
    }
}
