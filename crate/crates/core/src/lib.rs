//! European option pricing on an underlying whose price tracks planetary-boundary
//! performance.
//!
//! The chain is: boundary readings `h` -> impact aggregate `H` ([`pb`]) ->
//! spot `S = S0 - alpha dH` ([`mapping`]) -> call/put values. Prices come
//! from three independent routes: the closed form ([`analytic`]), the heat
//! equation solved by kernel quadrature or finite differences ([`pde`]), and
//! Monte Carlo ([`mc`]).

pub mod analytic;
pub mod error;
pub mod fmt;
pub mod mapping;
pub mod mc;
pub mod normal;
pub mod pb;
pub mod pde;
pub mod quadrature;
pub mod scenario;

pub use analytic::{
    call_price, d1_d2, price_pb_option, put_price, quote, MarketParams, Method, PriceQuote,
};
pub use error::{Error, Result};
pub use mapping::{
    classify_extremum, hessian_of_price, stock_price, Classification, ExtremumReport,
    MappingParams, SpotPrice,
};
pub use mc::{mc_price, McConfig, McEstimate};
pub use normal::{inverse_normal_cdf, normal_cdf, normal_pdf};
pub use pb::{
    human_impact, impact_delta, validate_matrix, InteractionMatrix, PbDocument, PbVector,
};
pub use pde::{
    fd_price, fd_solve, from_heat, greens_function_price, to_heat, Grid, HeatVariables, QuadConfig,
    Scheme,
};
pub use scenario::{run_scenario, strike_from_target, Scenario, ScenarioDocument, TrajectoryPoint};
