#pragma once

#include "arcd/app.hpp"
#include "arcd/commands.hpp"
#include "arcd/decode.hpp"
#include "arcd/error.hpp"
#include "arcd/fixtures.hpp"
#include "arcd/guidance.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/mask_io.hpp"
#include "arcd/model.hpp"
#include "arcd/util.hpp"
#include "arcd/visual.hpp"
