#pragma once

#include <stdexcept>
#include <string>

namespace procuraudit {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyVocabulary : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularDesign : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateAfterExclusion : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingleClassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace procuraudit
