#pragma once

#include "nomaq/channel.hpp"
#include "nomaq/decoders.hpp"
#include "nomaq/harness.hpp"
#include "nomaq/modulation.hpp"
#include "nomaq/qubo.hpp"
#include "nomaq/signal.hpp"
