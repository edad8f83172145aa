#pragma once

#include "mzgain/errors.hpp"
#include "mzgain/fock.hpp"
#include "mzgain/metrology.hpp"
#include "mzgain/normal_order.hpp"
#include "mzgain/params.hpp"
#include "mzgain/state_factory.hpp"
#include "mzgain/sweep.hpp"
#include "mzgain/table_io.hpp"
