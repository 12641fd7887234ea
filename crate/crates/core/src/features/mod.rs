//! Image handling and feature extraction.

pub mod hog;
pub mod image;
pub mod sample;

pub use self::hog::{compute_hog, HogParams, HOG_CHANNELS};
pub use self::image::{extract_patch, GrayImage, Patch};
pub use self::sample::{
    scale_model_size, scale_sample, translation_sample, ScaleLayout, TranslationLayout,
};
