pub mod compare;
pub mod nerf_convert;
pub mod oracle_render;
pub mod reproject;
pub mod rig_gen;
