#include "lift3d/error.h"

namespace lift3d {

void throw_validation(const std::string& what) { throw ValidationError(what); }

}  // namespace lift3d
