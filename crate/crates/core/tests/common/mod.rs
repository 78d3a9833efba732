pub mod spo;
