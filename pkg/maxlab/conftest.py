import logging

import pytest
from loguru import logger

from maxlab.mesh.mesh import build_box_mesh, build_rect_mesh, build_square_with_hole


@pytest.fixture
def loguru_caplog(caplog):
    class PropagateHandler(logging.Handler):
        def emit(self, record):
            logging.getLogger(record.name).handle(record)

    # Remove default Loguru handlers
    logger.remove()

    # Add handler to propagate Loguru logs to standard logging
    logger.add(PropagateHandler(), level="DEBUG")

    yield caplog

    logger.remove()


@pytest.fixture(scope="session")
def unit_square():
    return build_rect_mesh((1.0, 1.0), 4)


@pytest.fixture(scope="session")
def unit_cube():
    return build_box_mesh((1.0, 1.0, 1.0), 2)


@pytest.fixture(scope="session")
def holed_square():
    return build_square_with_hole(3.0, 1.0, 6)


@pytest.fixture(scope="session", params=["square", "cube", "hole"])
def catalogue_mesh(request, unit_square, unit_cube, holed_square):
    return {"square": unit_square, "cube": unit_cube, "hole": holed_square}[request.param]
