#include "racs/wire.hpp"
