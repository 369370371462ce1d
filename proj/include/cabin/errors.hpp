#pragma once

#include <stdexcept>
#include <string>

namespace cabin {

// Exit-code category carried by every library error; the CLI maps it to
// its process exit status.
enum class ErrorCategory {
  config = 2,    // invalid configuration or I/O
  data = 3,      // data or algorithm failure
  semantic = 4,  // misuse of a well-formed request
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define CABIN_DEFINE_ERROR(Name, Category)                       \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what)                       \
        : Error(ErrorCategory::Category, what) {}                \
  }

// discretizer
CABIN_DEFINE_ERROR(InvalidSamples, data);
CABIN_DEFINE_ERROR(TooFewSamples, data);
CABIN_DEFINE_ERROR(DegenerateSamples, data);
CABIN_DEFINE_ERROR(FitDiverged, data);
CABIN_DEFINE_ERROR(NoValidFit, data);
CABIN_DEFINE_ERROR(LabelOutOfRange, data);

// bayesnet
CABIN_DEFINE_ERROR(MissingColumn, data);
CABIN_DEFINE_ERROR(UnknownNode, semantic);
CABIN_DEFINE_ERROR(ImpossibleEvidence, data);
CABIN_DEFINE_ERROR(StateSpaceTooLarge, data);
CABIN_DEFINE_ERROR(InvalidModel, data);

// tuner
CABIN_DEFINE_ERROR(NotAQosNode, semantic);
CABIN_DEFINE_ERROR(TunableEvidence, semantic);

// simulator
CABIN_DEFINE_ERROR(ConfigInvalid, config);
CABIN_DEFINE_ERROR(UntrainedModel, config);

// I/O
CABIN_DEFINE_ERROR(IoError, config);
CABIN_DEFINE_ERROR(FormatError, config);

#undef CABIN_DEFINE_ERROR

}  // namespace cabin
