//! The learned code: encoder/decoder networks, concatenated-code
//! initialization and checkpoint persistence.

mod checkpoint;
mod network;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_for, save_checkpoint, Checkpoint, CHECKPOINT_VERSION,
};
pub use network::{
    concat_init, harden, harden_batch, init_network, messages_to_input, messages_to_targets, BitVector,
    BnPolicy, CodeDimensions, DecoderParams, EncoderParams, Linear, NetworkParams, TapeNet,
    MODULATION_FACTOR,
};
