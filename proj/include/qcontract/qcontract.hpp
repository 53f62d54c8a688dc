// qcontract.hpp: umbrella header

#pragma once

#include "qcontract/error.hpp"
#include "qcontract/operator_core.hpp"
#include "qcontract/channels.hpp"
#include "qcontract/divergences.hpp"
#include "qcontract/contraction.hpp"
#include "qcontract/io.hpp"
