from pyefc.config import VERSION as __version__
import pyefc.schema.define as define
import pyefc.misc.commands as command
