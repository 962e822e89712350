#include "mmhedge/errors.hpp"

namespace mmhedge {

int exit_code(ErrorFamily family) noexcept {
    switch (family) {
    case ErrorFamily::Config: return 2;
    case ErrorFamily::Data: return 3;
    case ErrorFamily::Numerical: return 4;
    }
    return 1;
}

}  // namespace mmhedge
