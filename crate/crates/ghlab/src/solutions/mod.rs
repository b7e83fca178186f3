//! Explicit solutions: flat `C^{n+1}`, Taub-NUT, semi-flat, and the periodic
//! Ooguri-Vafa family.

pub mod bessel;
pub mod flat;
pub mod ooguri_vafa;
pub mod semiflat;
pub mod taub_nut;

pub use bessel::{bessel_k0, bessel_k1, k0_asymptotic};
pub use flat::{flat_solution, FlatSample, FlatToric};
pub use ooguri_vafa::{ooguri_vafa, ov_flux_through, ov_total_flux, ModeSum, OoguriVafa};
pub use semiflat::{semiflat, Semiflat};
pub use taub_nut::{taub_nut, TaubNut};
