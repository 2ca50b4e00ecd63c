"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import subprocess
from typing import Optional

from common.event import Event
from config import Config


class App:
    config: Optional[Config] = None
    on_notify = Event("app.on_notify")

    try:
        version = (
            subprocess.check_output(["git", "describe", "--tags", "--always"], stderr=subprocess.DEVNULL)
            .strip()
            .decode()
        )
    except Exception:
        version = "unknown"

    @classmethod
    def configure(cls, config: Config) -> Config:
        cls.config = config
        return config

    @classmethod
    def notify(cls, message: str) -> None:
        cls.on_notify(message)
