#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace housekeep {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scene / file loading
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct InvalidCell : Error { using Error::Error; };

// Preferences
struct DuplicateClassification : Error { using Error::Error; };
struct UnknownCategory : Error { using Error::Error; };
struct MissingKey : Error { using Error::Error; };
struct NotCorrect : Error { using Error::Error; };
struct UnequalRaterCounts : Error { using Error::Error; };
// Raised when the rating distribution is degenerate (chance agreement = 1)
// and kappa is undefined.
struct DegenerateAgreement : Error { using Error::Error; };

// Episode generation
struct GenerationExhausted : Error { using Error::Error; };
struct InvalidCounts : Error { using Error::Error; };

// Embodiment
struct BudgetExhausted : Error { using Error::Error; };
struct NoPath : Error { using Error::Error; };
struct TargetLost : Error { using Error::Error; };

// Ranker
struct OutOfVocabulary : Error {
  OutOfVocabulary(const std::string& msg, std::vector<std::string> tokens)
      : Error(msg), missing(std::move(tokens)) {}
  std::vector<std::string> missing;
};
struct NoPositivePairs : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };

// Reporting
struct EmptySet : Error { using Error::Error; };

}  // namespace housekeep
