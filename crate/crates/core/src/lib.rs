pub mod analysis;
pub mod app;
pub mod fespace;
pub mod flux;
pub mod mesh;
pub mod model;
pub mod operator;
pub mod timeint;
