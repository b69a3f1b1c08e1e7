//! Online nexting phase that picks each feature's input neighborhood.
//!
//! A bank of linear GVFs predicts the discounted future of every raw input.
//! Every `update_period` steps each target's neighborhood is reset to the `k`
//! positions whose channel-summed GVF weight magnitudes are largest. A
//! QV(0) learner over random ReLU features of those neighborhoods supplies
//! the ε-greedy behaviour policy.

mod gvf;
mod pan;
mod value_net;

pub use gvf::{select_neighborhoods, GvfBank};
pub use pan::{pan_run, PanConfig, PanRunner};
pub use value_net::PanValueNet;
