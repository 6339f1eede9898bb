//! Tools for digitizing an archive of aerial reconnaissance prints: optical
//! arithmetic, sortie identifiers, preservation triage, a robot scanning
//! cell simulator, cost modelling and calibration-strip QC.

pub mod calibration_qc;
pub mod cli;
pub mod economics;
pub mod photogrammetry;
pub mod preservation;
pub mod reproduce;
pub mod scan_cell;
pub mod sortie_id;
