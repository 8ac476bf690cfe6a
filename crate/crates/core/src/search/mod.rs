pub mod descent;
pub mod exact;
pub mod inner;
pub mod lattice;
pub mod lp;
