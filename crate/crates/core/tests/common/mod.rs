#![allow(dead_code)]

pub mod oracle;

pub use mch_peakon::Mollifier;
