//! Reflection-based Protocol Buffers toolkit.
//!
//! Schemas are parsed at run time from `.proto` text into a
//! [`DescriptorPool`]; messages of any loaded type are manipulated through
//! [`DynamicMessage`] and serialized with the [`wire`] and [`text`] codecs.
//! The [`rexp`] module maps structured host values onto the universal
//! `rexp.REXP` schema, and [`histogram`] implements mergeable fixed-bucket
//! histograms over `HistogramTools.HistogramState`.

pub mod bridge;
pub mod bundled;
pub mod histogram;
pub mod message;
pub mod random;
pub mod rexp;
pub mod schema;
pub mod text;
pub mod value;
pub mod wire;

pub use bridge::{distinct_count, host_to_wire, wire_to_host, CoercionError, CoercionOptions, Complex, HostValue, NA_INTEGER};
pub use histogram::{bin_data, merge_histograms, Binned, Histogram, HistogramError};
pub use message::{DynamicMessage, MessageError, Selector};
pub use rexp::{can_serialize, serialize_value, unserialize_value, value_equal, RData, RValue, RexpError, Serialized};
pub use schema::{
    parse_proto_source, Descriptor, DescriptorPool, EnumDescriptor, EnumSelector, EnumValueDescriptor, FieldDescriptor,
    FieldType, FileDescriptor, Label, MessageDescriptor, ProtoLoader, SchemaError,
};
pub use text::{parse_text, print_text, summary_line, TextError};
pub use value::Value;
pub use wire::{decode_message, encode_message, UnknownField, UnknownFieldSet, WireError, WireType};
